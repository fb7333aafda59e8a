"""The region K = {1 <= x <= 2, 4x/3 <= y <= 5x/3}, its dilations and the cutoff chi.

K is a trapezoid.  Shrinking it toward its centroid by a factor s gives the
convex family K_s; the gauge ``radial(x, y)`` is the smallest s with
(x, y) in K_s, so K_s = {radial <= s} and K = {radial <= 1}.  The cutoff is 1
on K_{s0}, vanishes outside K_{s1}, and interpolates with a C-infinity step
in the gauge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import DomainError

# Half-planes a_x x + a_y y <= b describing K.
HALF_PLANES = (
    (Fraction(-1), Fraction(0), Fraction(-1)),
    (Fraction(1), Fraction(0), Fraction(2)),
    (Fraction(4, 3), Fraction(-1), Fraction(0)),
    (Fraction(-5, 3), Fraction(1), Fraction(0)),
)
VERTICES = (
    (Fraction(1), Fraction(4, 3)),
    (Fraction(2), Fraction(8, 3)),
    (Fraction(2), Fraction(10, 3)),
    (Fraction(1), Fraction(5, 3)),
)
AREA = Fraction(1, 2)


def _polygon_centroid(vertices) -> tuple[Fraction, Fraction]:
    a = cx = cy = Fraction(0)
    for (x0, y0), (x1, y1) in zip(vertices, vertices[1:] + vertices[:1]):
        cross = x0 * y1 - x1 * y0
        a += cross
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    return cx / (3 * a), cy / (3 * a)


CENTROID = _polygon_centroid(VERTICES)
# Support numbers of K - centroid: facet i sits at a_i . (p - c) = h_i.
_H = tuple(b - ax * CENTROID[0] - ay * CENTROID[1] for ax, ay, b in HALF_PLANES)
_A = np.array([[float(ax), float(ay)] for ax, ay, _ in HALF_PLANES])
_HF = np.array([float(h) for h in _H])
_CF = np.array([float(c) for c in CENTROID])


def in_region(x, y) -> bool:
    """Exact membership in K for rationals (ints, Fractions or decimal strings)."""
    x, y = Fraction(x), Fraction(y)
    return 1 <= x <= 2 and 4 * x <= 3 * y <= 5 * x


def radial(x, y) -> np.ndarray:
    """Gauge of K about its centroid, vectorised over numpy arrays."""
    dx = np.asarray(x, dtype=np.float64) - _CF[0]
    dy = np.asarray(y, dtype=np.float64) - _CF[1]
    vals = [(_A[i, 0] * dx + _A[i, 1] * dy) / _HF[i] for i in range(len(_HF))]
    return np.maximum.reduce(vals)


def chain_check(t: int, u: int) -> bool:
    """t < u < 2t < t+u < 2u < u+2t < 2u+t < 2u+2t."""
    chain = (t, u, 2 * t, t + u, 2 * u, u + 2 * t, 2 * u + t, 2 * u + 2 * t)
    return all(a < b for a, b in zip(chain, chain[1:]))


def enumerate_dilation(N: int) -> Iterator[tuple[int, int]]:
    """Integer points of N*K in lexicographic order."""
    if N < 1:
        raise DomainError(f"dilation scale must be >= 1, got {N}")
    for t in range(N, 2 * N + 1):
        lo = -(-4 * t // 3)
        hi = 5 * t // 3
        for u in range(lo, hi + 1):
            yield t, u


def count_dilation(N: int) -> int:
    return sum(max(0, 5 * t // 3 - (-(-4 * t // 3)) + 1) for t in range(N, 2 * N + 1))


def _f(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(r) -> np.ndarray:
    """C-infinity step: 1 for r <= 0, 0 for r >= 1."""
    r = np.clip(np.asarray(r, dtype=np.float64), 0.0, 1.0)
    a, b = _f(1.0 - r), _f(r)
    return a / (a + b)


def bump(r) -> np.ndarray:
    """exp(1 - 1/(1 - r^2)) on |r| < 1, zero outside; peak value 1 at r = 0."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class Cutoff:
    shrink: float = 0.6
    support: float = 0.85

    def __post_init__(self):
        if not 0.0 < self.shrink < self.support < 1.0:
            raise DomainError(
                f"need 0 < shrink < support < 1, got shrink={self.shrink}, support={self.support}"
            )

    @property
    def margin(self) -> float:
        """Euclidean distance from K_chi to the boundary of K."""
        return min(
            (1.0 - self.support) * float(h) / math.hypot(float(ax), float(ay))
            for (ax, ay, _), h in zip(HALF_PLANES, _H)
        )

    def bounding_box(self, s: float | None = None) -> tuple[float, float, float, float]:
        s = self.support if s is None else s
        xs = [float(CENTROID[0] + s * (vx - CENTROID[0])) for vx, _ in VERTICES]
        ys = [float(CENTROID[1] + s * (vy - CENTROID[1])) for _, vy in VERTICES]
        return min(xs), max(xs), min(ys), max(ys)


def chi(c: Cutoff, x, y):
    r = (radial(x, y) - c.shrink) / (c.support - c.shrink)
    out = smooth_step(r)
    return float(out) if out.ndim == 0 else out


def support_rows(c: Cutoff, X: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rows of R_X = {(m, n): chi(m/X, n/X) != 0} as arrays (m, n_lo, n_hi).

    Each row of a convex support is an interval of n.  Endpoints are estimated
    from the bounding box and then settled with the gauge itself, so a point is
    included exactly when ``radial(m/X, n/X) < support``.
    """
    if X < 1:
        raise DomainError(f"X must be >= 1, got {X}")
    x0, x1, y0, y1 = c.bounding_box()
    m = np.arange(math.floor(x0 * X), math.ceil(x1 * X) + 1, dtype=np.int64)
    s1 = c.support
    # Vertical facets depend on x alone; evaluate them exactly as radial() does.
    dx = m / X - _CF[0]
    m = m[((_A[0, 0] * dx + 0.0) / _HF[0] < s1) & ((_A[1, 0] * dx + 0.0) / _HF[1] < s1)]

    def inside(mm, nn):
        return radial(mm / X, nn / X) < s1

    # Per-row bounds from the two slanted facets, widened by one for safety.
    cx, cy = (float(v) for v in CENTROID)
    xs = m / X
    lo_f = cy + (4.0 / 3.0) * (xs - cx) - s1 * float(_H[2])
    hi_f = cy + (5.0 / 3.0) * (xs - cx) + s1 * float(_H[3])
    lo = np.floor(np.maximum(lo_f, y0) * X).astype(np.int64) - 1
    hi = np.ceil(np.minimum(hi_f, y1) * X).astype(np.int64) + 1
    cap_lo, cap_hi = lo.copy(), hi.copy()
    while True:
        move = (lo <= cap_hi) & ~inside(m, lo)
        if not move.any():
            break
        lo[move] += 1
    while True:
        move = (hi >= cap_lo) & ~inside(m, hi)
        if not move.any():
            break
        hi[move] -= 1
    keep = lo <= hi
    m, lo, hi = m[keep], lo[keep], hi[keep]
    if m.size and (inside(m, lo - 1).any() or inside(m, hi + 1).any()):
        raise AssertionError("support row estimate was not conservative")
    return m, lo, hi


def support_lattice(c: Cutoff, X: int, max_points: int = 50_000_000) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (m, n) in R_X in lexicographic order together with chi_X(m, n)."""
    from .errors import ResourceError

    rows, lo, hi = support_rows(c, X)
    counts = hi - lo + 1
    total = int(counts.sum())
    if total > max_points:
        raise ResourceError(f"support of chi_X has {total} points, budget {max_points}")
    m = np.repeat(rows, counts)
    starts = np.repeat(lo - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    n = starts + np.arange(total, dtype=np.int64)
    return m, n, chi(c, m / X, n / X)


def shift_threshold(c: Cutoff, W: int, a_W: int, b_W: int) -> int:
    """X beyond which the W-trick shift cannot leave K: ceil(max(a_W, b_W) / (W * margin))."""
    shift = max(abs(a_W), abs(b_W))
    return max(1, math.ceil(shift / (W * c.margin)))


def support_shift_check(c: Cutoff, W: int, a_W: int, b_W: int, X: int) -> bool:
    """Whether every support point maps into K after t = a_W + W m, u = b_W + W n, scale N = W X."""
    if X < 1:
        raise DomainError(f"X must be >= 1, got {X}")
    rows, lo, hi = support_rows(c, X)
    N = W * X
    # Each row maps to a segment; K is convex, so its endpoints decide.
    for m, n0, n1 in zip(rows.tolist(), lo.tolist(), hi.tolist()):
        t = a_W + W * m
        for n in (n0, n1):
            if not in_region(Fraction(t, N), Fraction(b_W + W * n, N)):
                return False
    return True


def quadrature_mass(c: Cutoff, grid: int = 1000) -> float:
    """Midpoint rule for the integral of chi over the plane, on a grid x grid box around K_chi."""
    x0, x1, y0, y1 = c.bounding_box()
    hx, hy = (x1 - x0) / grid, (y1 - y0) / grid
    xs = x0 + hx * (np.arange(grid) + 0.5)
    ys = y0 + hy * (np.arange(grid) + 0.5)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return math.fsum(np.asarray(chi(c, gx, gy)).ravel()) * hx * hy


def export_point_cloud(c: Cutoff, X: int) -> list[tuple[int, int, float]]:
    m, n, w = support_lattice(c, X)
    return list(zip(m.tolist(), n.tolist(), w.tolist()))
