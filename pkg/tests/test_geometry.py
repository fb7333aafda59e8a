import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from primemagic.errors import DomainError, ResourceError
from primemagic.geometry import (
    AREA,
    CENTROID,
    HALF_PLANES,
    VERTICES,
    Cutoff,
    chain_check,
    chi,
    count_dilation,
    enumerate_dilation,
    export_point_cloud,
    in_region,
    quadrature_mass,
    radial,
    shift_threshold,
    smooth_step,
    support_lattice,
    support_rows,
    support_shift_check,
)

C = Cutoff()


def _scaled_vertex(c, s, i):
    vx, vy = VERTICES[i]
    return CENTROID[0] + Fraction(s) * (vx - CENTROID[0]), CENTROID[1] + Fraction(s) * (vy - CENTROID[1])


def test_region_examples():
    assert in_region(Fraction(3, 2), Fraction(9, 4))
    assert not in_region(1, 1)
    assert in_region(2, Fraction(10, 3))
    assert in_region("1.5", "2.25")


def test_region_constants():
    assert AREA == Fraction(1, 2)
    assert CENTROID == (Fraction(14, 9), Fraction(7, 3))
    for x, y in VERTICES:
        assert in_region(x, y)


def test_dilation_examples():
    assert (4, 6) in set(enumerate_dilation(3))
    assert list(enumerate_dilation(1)) == [(2, 3)]
    with pytest.raises(DomainError):
        list(enumerate_dilation(0))


@pytest.mark.parametrize("N", [1, 2, 7, 30])
def test_dilation_matches_membership_brute_force(N):
    brute = [(t, u) for t in range(0, 3 * N) for u in range(0, 4 * N) if in_region(Fraction(t, N), Fraction(u, N))]
    assert list(enumerate_dilation(N)) == brute
    assert count_dilation(N) == len(brute)


def test_every_dilation_point_satisfies_chain():
    for N in range(1, 201):
        for t, u in enumerate_dilation(N):
            assert chain_check(t, u), (N, t, u)


@pytest.mark.parametrize("N", [500, 1000, 5000])
def test_dilation_density(N):
    assert abs(count_dilation(N) / N**2 - 0.5) <= 0.025


def test_chain_examples():
    assert chain_check(3, 4)
    assert not chain_check(12, 42)
    assert not chain_check(5, 5)


def test_chi_examples():
    assert chi(C, *map(float, CENTROID)) == 1.0
    assert chi(C, 0.0, 0.0) == 0.0
    for i in range(4):
        x, y = _scaled_vertex(C, C.support, i)
        assert chi(C, float(x), float(y)) == 0.0


def test_chi_is_one_on_inner_region_and_zero_outside_support():
    rng = np.random.default_rng(1)
    w = rng.dirichlet(np.ones(4), size=2000)
    for s, expect in ((C.shrink * 0.999, 1.0), (1.0, None)):
        pts = np.array([[float(v) for v in _scaled_vertex(C, s, i)] for i in range(4)])
        xy = w @ pts
        vals = chi(C, xy[:, 0], xy[:, 1])
        if expect is not None:
            assert np.all(vals == expect)
    xs, ys = np.meshgrid(np.linspace(0.5, 2.5, 301), np.linspace(1, 4, 301))
    vals = chi(C, xs, ys)
    assert np.all((0 <= vals) & (vals <= 1))
    assert np.all(vals[radial(xs, ys) >= C.support] == 0)
    assert np.all(vals[radial(xs, ys) <= C.shrink] == 1)


def test_chi_nesting():
    xs, ys = np.meshgrid(np.linspace(0.9, 2.1, 241), np.linspace(1.2, 3.5, 241))
    vals = chi(C, xs, ys)
    for x, y, v in zip(xs.ravel(), ys.ravel(), vals.ravel()):
        if v > 0:
            fx, fy = Fraction(x), Fraction(y)
            assert in_region(fx, fy)
            assert 1 < fx < 2 and 4 * fx < 3 * fy < 5 * fx
        if v == 1:
            assert radial(x, y) <= C.support


def test_chi_has_no_assumed_symmetry():
    xs, ys = np.meshgrid(np.linspace(1, 3.4, 121), np.linspace(1, 3.4, 121))
    a, b = chi(C, xs, ys), chi(C, ys, xs)
    assert np.any(a != b)


def test_chi_gradient_bounded():
    # |grad chi| <= max|step'| * |grad radial| / (s1 - s0).
    r = np.linspace(0, 1, 200_001)
    step_slope = np.max(np.abs(np.diff(smooth_step(r)))) / (r[1] - r[0])
    grad_radial = max(math.hypot(float(a), float(b)) / float(bnd - a * CENTROID[0] - b * CENTROID[1]) for a, b, bnd in HALF_PLANES)
    L = step_slope * grad_radial / (C.support - C.shrink)
    h = 1e-3
    xs, ys = np.meshgrid(np.arange(0.9, 2.1, h), np.arange(1.2, 3.5, h), indexing="ij")
    vals = chi(C, xs, ys)
    assert np.max(np.abs(np.diff(vals, axis=0))) / h <= L * 1.01
    assert np.max(np.abs(np.diff(vals, axis=1))) / h <= L * 1.01


def test_cutoff_validation():
    with pytest.raises(DomainError):
        Cutoff(0.9, 0.8)
    with pytest.raises(DomainError):
        Cutoff(0.5, 1.0)
    assert C.margin == pytest.approx(0.02, abs=5e-4)


@pytest.mark.parametrize("X", [1, 2, 5, 17, 40, 64])
def test_support_lattice_matches_brute_force(X):
    m, n, w = support_lattice(C, X)
    brute = [(a, b) for a in range(0, 3 * X) for b in range(0, 4 * X) if chi(C, a / X, b / X) > 0]
    assert list(zip(m.tolist(), n.tolist())) == brute
    assert np.all(w > 0)


def test_support_empty_for_x1_strict():
    m, _, _ = support_lattice(Cutoff(0.1, 0.2), 1)
    assert m.size == 0


def test_support_lattice_budget():
    with pytest.raises(ResourceError):
        support_lattice(C, 200, max_points=100)


def test_shift_examples():
    assert support_shift_check(Cutoff(0.6, 0.9), 6, 1, 1, 10**4)
    for X in (1, 3, 10, 100, 1000):
        assert support_shift_check(C, 42, 0, 0, X)


def test_shift_threshold_reported():
    c = Cutoff(0.6, 0.999)
    W, a, b = 6, 5, 0
    thr = shift_threshold(c, W, a, b)
    assert thr > 1
    assert any(not support_shift_check(c, W, a, b, X) for X in range(1, 40))
    for X in (thr, thr + 1, 2 * thr):
        assert support_shift_check(c, W, a, b, X)


def _chi_integral_radial(c: Cutoff, k: int = 200_000) -> float:
    """Area(K_s) = s^2/2, so the integral is s0^2/2 + int_{s0}^{s1} step((s - s0)/(s1 - s0)) s ds."""
    s = np.linspace(c.shrink, c.support, k + 1)
    f = smooth_step((s - c.shrink) / (c.support - c.shrink)) * s
    simpson = (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum()) * (s[1] - s[0]) / 3
    return c.shrink**2 / 2 + simpson


@pytest.mark.parametrize("c", [Cutoff(), Cutoff(0.3, 0.9), Cutoff(0.5, 0.6)])
def test_quadrature_matches_radial_integral(c):
    assert quadrature_mass(c, 1000) == pytest.approx(_chi_integral_radial(c), rel=2e-4)


def test_quadrature_default_value():
    assert quadrature_mass(C) == pytest.approx(0.263654, abs=2e-5)


def test_point_cloud():
    cloud = export_point_cloud(C, 20)
    m, n, w = support_lattice(C, 20)
    assert len(cloud) == m.size
    assert cloud[0] == (int(m[0]), int(n[0]), float(w[0]))


@given(st.fractions(0, 3), st.fractions(0, 4))
def test_region_membership_agrees_with_gauge(x, y):
    r = float(radial(float(x), float(y)))
    if abs(r - 1) > 1e-9:
        assert in_region(x, y) == (r < 1)
