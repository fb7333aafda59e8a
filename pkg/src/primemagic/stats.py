"""Empirical lattice sums over the W-tricked forms.

Everything here is a finite sum over R_X = {(m, n): chi(m/X, n/X) != 0}
with t = a_W + W m and u = b_W + W n.  Sums are taken with ``math.fsum`` so
each reported value is the correctly rounded exact sum, independent of
how the points are grouped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .algebra import AffineForm, forms_for, pairwise_nonproportional
from .errors import DomainError
from .geometry import Cutoff, bump, chi, quadrature_mass, support_lattice, support_rows, support_shift_check
from .local import WNormalization, g_multiplicative, is_squarefree, moebius, singular_series
from .primes import WeightKind, prime_power_scan, weight_table

STAR_INDEX = {"1": 0, "2": 1, "delta": 2}
DIAGONAL_DIRECTIONS = ((0, 1), (1, -1), (1, 0), (1, 1), (2, -1))


@dataclass(frozen=True)
class CoreLattice:
    q0: int
    norm: WNormalization
    cutoff: Cutoff
    X: int
    m: np.ndarray = field(repr=False, compare=False)
    n: np.ndarray = field(repr=False, compare=False)
    chi: np.ndarray = field(repr=False, compare=False)
    core: tuple = field(repr=False, compare=False)  # five value arrays, A1..A5
    residual: tuple = field(repr=False, compare=False)  # N1, N2, N3

    @property
    def max_value(self) -> int:
        vals = [int(v.max()) for v in self.core + self.residual if v.size]
        return max(vals, default=0)

    def weights(self, kind: WeightKind, values: np.ndarray) -> np.ndarray:
        return weight_table(kind, max(self.max_value, 2))[values]

    def omega(self, kind: WeightKind) -> np.ndarray:
        out = np.ones(self.m.shape)
        for v in self.core:
            out = out * self.weights(kind, v)
        return out


@lru_cache(maxsize=16)
def core_lattice(q0: int, norm: WNormalization, cutoff: Cutoff, X: int) -> CoreLattice:
    if not support_shift_check(cutoff, norm.W, norm.a_W, norm.b_W, X):
        raise DomainError(f"X={X}: shifted support leaves K; increase X")
    core_forms, res_forms = forms_for(q0).w_tricked(norm.W, norm.a_W, norm.b_W)
    m, n, w = support_lattice(cutoff, X)
    core = tuple(f(m, n) for f in core_forms)
    residual = tuple(f(m, n) for f in res_forms)
    return CoreLattice(q0, norm, cutoff, X, m, n, w, core, residual)


def _fsum(a: np.ndarray) -> float:
    return math.fsum(a.tolist())


@dataclass
class MassReport:
    X: int
    weight: str
    M1: float
    C: float
    core_prime_pairs: int
    all_prime_pairs: int
    c_pred: float
    ratio: float  # M1 / X^2

    @property
    def c_ratio(self) -> float:
        return self.ratio / self.c_pred if self.c_pred else math.nan


def predicted_constant(q0: int, norm: WNormalization, cutoff: Cutoff, P: int = 10_000) -> float:
    """Truncated core singular series times the integral of chi."""
    return singular_series(q0, "core", P, norm.w).value * _chi_integral(cutoff)


@lru_cache(maxsize=8)
def _chi_integral(cutoff: Cutoff) -> float:
    return quadrature_mass(cutoff, 1000)


def core_mass(q0: int, norm: WNormalization, cutoff: Cutoff, X: int, weight: WeightKind | str = WeightKind.THETA, P: int = 10_000) -> MassReport:
    kind = WeightKind(weight)
    lat = core_lattice(q0, norm, cutoff, X)
    omega = lat.omega(kind)
    res = np.ones(lat.m.shape)
    for v in lat.residual:
        res = res * lat.weights(kind, v)
    core_prime = np.ones(lat.m.shape, dtype=bool)
    for v in lat.core:
        core_prime &= lat.weights(WeightKind.INDICATOR, v) > 0
    all_prime = core_prime.copy()
    for v in lat.residual:
        all_prime &= lat.weights(WeightKind.INDICATOR, v) > 0
    M1 = _fsum(lat.chi * omega)
    return MassReport(
        X=X,
        weight=kind.value,
        M1=M1,
        C=_fsum(lat.chi * omega * res),
        core_prime_pairs=int(core_prime.sum()),
        all_prime_pairs=int(all_prime.sum()),
        c_pred=predicted_constant(q0, norm, cutoff, P),
        ratio=M1 / X**2,
    )


def joint_functional(q0: int, norm: WNormalization, cutoff: Cutoff, X: int, weight: WeightKind | str = WeightKind.THETA) -> float:
    """C_{q0}(X): the core mass further weighted by the three residual values."""
    kind = WeightKind(weight)
    lat = core_lattice(q0, norm, cutoff, X)
    terms = lat.chi * lat.omega(kind)
    for v in lat.residual:
        terms = terms * lat.weights(kind, v)
    return _fsum(terms)


def _star(star) -> str:
    s = str(star).lower()
    s = {"d": "delta", "δ": "delta", "3": "delta"}.get(s, s)
    if s not in STAR_INDEX:
        raise DomainError(f"star must be one of 1, 2, delta; got {star!r}")
    return s


def marginal(q0: int, norm: WNormalization, cutoff: Cutoff, X: int, star, weight: WeightKind | str = WeightKind.THETA) -> tuple[np.ndarray, np.ndarray]:
    """S_1(m), S_2(n) or S_Delta(r = m + n) as (keys, values)."""
    lat = core_lattice(q0, norm, cutoff, X)
    key = {"1": lat.m, "2": lat.n, "delta": lat.m + lat.n}[_star(star)]
    terms = lat.chi * lat.omega(WeightKind(weight))
    order = np.argsort(key, kind="stable")
    key, terms = key[order], terms[order]
    keys, starts = np.unique(key, return_index=True)
    bounds = list(starts) + [key.size]
    return keys, np.array([math.fsum(terms[a:b].tolist()) for a, b in zip(bounds, bounds[1:])])


def check_modulus(d: int, q0: int, norm: WNormalization) -> None:
    if not is_squarefree(d):
        raise DomainError(f"d={d} is not squarefree")
    if math.gcd(d, 6 * norm.W * q0) != 1:
        raise DomainError(f"d={d} is not coprime to 6*W*q0={6 * norm.W * q0}")


def restricted_mass(q0: int, norm: WNormalization, cutoff: Cutoff, X: int, d: int, star, weight: WeightKind | str = WeightKind.THETA) -> float:
    """A_d: the core mass over points where d divides the star residual.

    Equal to the marginal S_star summed over keys with d | N_star(key); summing
    the points directly keeps A_1 bit-identical to M1.
    """
    check_modulus(d, q0, norm)
    lat = core_lattice(q0, norm, cutoff, X)
    sel = lat.residual[STAR_INDEX[_star(star)]] % d == 0
    return _fsum((lat.chi * lat.omega(WeightKind(weight)))[sel])


def admissible_moduli(D: float, q0: int, norm: WNormalization) -> list[int]:
    bad = 6 * norm.W * q0
    return [d for d in range(1, int(math.floor(D)) + 1) if math.gcd(d, bad) == 1 and is_squarefree(d)]


@dataclass
class DiscrepancyReport:
    X: int
    delta: float
    star: str
    lam: str
    M1: float
    rows: list  # (d, A_d, g(d) M1, A_d - g(d) M1)
    sum_abs: float
    sum_unit: float
    sum_moebius: float

    @property
    def value(self) -> float:
        return self.sum_moebius if self.lam == "moebius" else self.sum_unit

    @property
    def normalized_abs(self) -> float:
        return self.sum_abs / self.M1 if self.M1 else 0.0

    @property
    def normalized_value(self) -> float:
        return self.value / self.M1 if self.M1 else 0.0


def discrepancy_sum(q0: int, norm: WNormalization, cutoff: Cutoff, X: int, delta: float, lam: str = "unit", star="1", weight: WeightKind | str = WeightKind.THETA) -> DiscrepancyReport:
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if lam not in ("unit", "moebius"):
        raise DomainError(f"lam must be 'unit' or 'moebius', got {lam!r}")
    star = _star(star)
    lat = core_lattice(q0, norm, cutoff, X)
    terms = lat.chi * lat.omega(WeightKind(weight))
    M1 = _fsum(terms)
    resid = lat.residual[STAR_INDEX[star]]
    rows = []
    for d in admissible_moduli(X**delta, q0, norm):
        A = _fsum(terms[resid % d == 0])
        pred = float(g_multiplicative(d, q0, star) * Fraction(M1))
        rows.append((d, A, pred, A - pred))
    errs = [r[3] for r in rows]
    return DiscrepancyReport(
        X=X,
        delta=delta,
        star=star,
        lam=lam,
        M1=M1,
        rows=rows,
        sum_abs=math.fsum(abs(e) for e in errs),
        sum_unit=math.fsum(errs),
        sum_moebius=math.fsum(moebius(r[0]) * r[3] for r in rows),
    )


def diagonal_forms(q0: int, norm: WNormalization) -> tuple[AffineForm, ...]:
    """Core forms in (r, s) with m = s, n = r - s."""
    core, _ = forms_for(q0).w_tricked(norm.W, norm.a_W, norm.b_W)
    return tuple(AffineForm(f.const, f.coeff_u, f.coeff_t - f.coeff_u) for f in core)


@dataclass
class DiagonalReport:
    M1: float
    diagonal_total: float
    rel_error: float
    count_direct: int
    count_diagonal: int
    weight: str

    @property
    def passed(self) -> bool:
        return self.count_direct == self.count_diagonal and self.rel_error <= 1e-9


def diagonal_mass_check(q0: int, norm: WNormalization, cutoff: Cutoff, X: int, weight: WeightKind | str = WeightKind.THETA) -> DiagonalReport:
    """Recompute M1 as sum_r S_Delta(r), enumerating (r, s) directly with the diagonal forms."""
    kind = WeightKind(weight)
    lat = core_lattice(q0, norm, cutoff, X)
    direct = lat.chi * lat.omega(kind)
    M1 = _fsum(direct)
    count_direct = int(np.count_nonzero(direct))

    rows, lo, hi = support_rows(cutoff, X)
    forms = diagonal_forms(q0, norm)
    table = weight_table(kind, max(lat.max_value, 2))
    s_all = np.arange(rows.min(), rows.max() + 1, dtype=np.int64) if rows.size else np.zeros(0, dtype=np.int64)
    r_lo = int((rows + lo).min()) if rows.size else 0
    r_hi = int((rows + hi).max()) if rows.size else -1
    per_r = []
    count_diag = 0
    for r in range(r_lo, r_hi + 1):
        s = s_all
        w = chi(cutoff, s / X, (r - s) / X)
        keep = w > 0
        s, w = s[keep], w[keep]
        om = np.ones(s.shape)
        for f in forms:
            om = om * table[f(r, s)]
        terms = w * om
        count_diag += int(np.count_nonzero(terms))
        per_r.append(math.fsum(terms.tolist()))
    total = math.fsum(per_r)
    rel = abs(total - M1) / abs(M1) if M1 else abs(total)
    return DiagonalReport(M1, total, rel, count_direct, count_diag, kind.value)


def diagonal_direction_check(q0: int, directions=None) -> bool:
    """The core directions after (m, n) -> (m + n, m) are the expected five and pairwise nonproportional."""
    forms_for(q0)
    if directions is None:
        core, _ = forms_for(q0).w_tricked(1, 0, 0)
        directions = [(f.coeff_u, f.coeff_t - f.coeff_u) for f in core]
        if sorted(directions) != sorted(DIAGONAL_DIRECTIONS):
            return False
    return pairwise_nonproportional(list(directions))


def prime_power_bound(q0: int, norm: WNormalization, cutoff: Cutoff, X: int) -> float:
    """Upper bound for M1(Lambda) - M1(theta): prime-power hits of the core forms times (log max)^5."""
    core, _ = forms_for(q0).w_tricked(norm.W, norm.a_W, norm.b_W)
    rows = support_rows(cutoff, X)
    hits = sum(prime_power_scan(f, X, rows) for f in core)
    lat = core_lattice(q0, norm, cutoff, X)
    return hits * math.log(max(lat.max_value, 3)) ** 5


@dataclass
class VarianceReport:
    X: int
    Q: int
    V: float
    window: str

    @property
    def normalized(self) -> float:
        """V / (X Q)."""
        return self.V / (self.X * self.Q)

    @property
    def log_exponent(self) -> float:
        """C with V = X Q (log X)^C."""
        return math.log(self.normalized) / math.log(math.log(self.X)) if self.normalized > 0 else -math.inf


def smooth_window(X: int) -> tuple[np.ndarray, np.ndarray]:
    """Integers n in [X, 2X] and F(n) = bump((n - 1.5X) / (0.5X))."""
    n = np.arange(X, 2 * X + 1, dtype=np.int64)
    return n, bump((n - 1.5 * X) / (0.5 * X))


def bdh_variance(X: int, Q: int) -> VarianceReport:
    """Mean square of Lambda-weighted progression counts against the coprime average, all q <= Q."""
    if not 1 <= Q <= X:
        raise DomainError(f"need 1 <= Q <= X, got Q={Q}, X={X}")
    n, F = smooth_window(X)
    lam = weight_table(WeightKind.LAMBDA, 2 * X)[n]
    lf = lam * F
    total = []
    for q in range(1, Q + 1):
        r = n % q
        s_lam = np.bincount(r, weights=lf, minlength=q)
        s_f = np.bincount(r, weights=F, minlength=q)
        a = np.arange(q)
        coprime = np.gcd(a, q) == 1
        phi = int(coprime.sum())
        mean = math.fsum(s_f[coprime].tolist()) / phi
        total.append(math.fsum(((s_lam[coprime] - mean) ** 2).tolist()))
    return VarianceReport(X, Q, math.fsum(total), "bump on [X, 2X]")
