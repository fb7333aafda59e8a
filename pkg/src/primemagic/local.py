"""Local arithmetic of the eight forms: W-trick residues, local densities, singular series.

All local counts go through one routine, :func:`count_residues`, which walks
the p residues of t and, for each, counts the residues of u that satisfy the
conditions.  A form whose u-coefficient is invertible mod p forbids exactly
one u on each row; otherwise it forbids either the whole row or nothing.
The same code handles p = 2 and p = q0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .algebra import CORE_INDICES, FORM_DIRECTIONS, RESIDUAL_INDICES, AffineForm, FormSystem, check_q0, forms_for
from .errors import DomainError, UnsupportedPrimeError
from .primes import is_prime, primes_up_to

STARS = ("1", "2", "delta")
_STAR_ALIASES = {"d": "delta", "δ": "delta", "3": "delta"}


def _row_conditions(p: int, forms: Sequence[AffineForm], t: np.ndarray):
    """Forbidden u per row (columns, -1 = none) and rows killed outright."""
    cols = []
    killed = np.zeros(t.shape, dtype=bool)
    for c, a, b in forms:
        base = (c + a * t) % p
        if b % p:
            cols.append((-base * pow(b % p, -1, p)) % p)
        else:
            killed |= base == 0
    forbidden = np.stack(cols, axis=1) if cols else np.zeros((t.size, 0), dtype=np.int64)
    return forbidden, killed


def _distinct_per_row(arr: np.ndarray) -> np.ndarray:
    if arr.shape[1] == 0:
        return np.zeros(arr.shape[0], dtype=np.int64)
    s = np.sort(arr, axis=1)
    return 1 + np.count_nonzero(np.diff(s, axis=1), axis=1)


def count_residues(p: int, forms: Sequence[AffineForm], vanish: AffineForm | None = None) -> int:
    """#{(t, u) mod p : every form is nonzero mod p, and ``vanish`` is zero mod p if given}."""
    t = np.arange(p, dtype=np.int64)
    forbidden, killed = _row_conditions(p, forms, t)
    if vanish is None:
        allowed = p - _distinct_per_row(forbidden)
        return int(allowed[~killed].sum())
    c, a, b = vanish
    base = (c + a * t) % p
    if b % p:
        u_star = (-base * pow(b % p, -1, p)) % p
        hit = (forbidden == u_star[:, None]).any(axis=1)
        return int(np.count_nonzero(~killed & ~hit))
    rows = ~killed & (base == 0)
    return int((p - _distinct_per_row(forbidden))[rows].sum())


def brute_count(p: int, forms: Sequence[AffineForm], vanish: AffineForm | None = None) -> int:
    """Direct enumeration of all p^2 residue pairs; an oracle for :func:`count_residues`."""
    t, u = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    ok = np.ones_like(t, dtype=bool)
    for f in forms:
        ok &= f(t, u) % p != 0
    if vanish is not None:
        ok &= vanish(t, u) % p == 0
    return int(ok.sum())


@dataclass(frozen=True)
class WNormalization:
    w: int
    q0: int
    W: int
    a_W: int
    b_W: int

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(int(p) for p in primes_up_to(self.w) if self.q0 % p)


def _allowed_pairs(p: int, fs: FormSystem) -> np.ndarray:
    t, u = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
    ok = np.ones((p, p), dtype=bool)
    for f in fs.forms:
        ok &= f(t, u) % p != 0
    return ok


@lru_cache(maxsize=64)
def compute_w_normalization(w: int, q0: int) -> WNormalization:
    """W = product of primes p <= w not dividing q0, with the lexicographically least (a_W, b_W).

    Admissible pairs are tabulated prime by prime; a residue mod W is admissible
    iff its reduction is admissible mod every p | W (Chinese remainder theorem),
    so the least pair is found by scanning a, then b, against those tables.
    """
    if w < 2:
        raise DomainError(f"w must be >= 2, got {w}")
    check_q0(q0)
    fs = forms_for(q0)
    ps = [int(p) for p in primes_up_to(w) if q0 % p]
    W = math.prod(ps)
    tables = {p: _allowed_pairs(p, fs) for p in ps}
    a_range = np.arange(W, dtype=np.int64)
    ok_a = np.ones(W, dtype=bool)
    for p, tab in tables.items():
        ok_a &= tab.any(axis=1)[a_range % p]
    a_W = int(np.argmax(ok_a))
    ok_b = np.ones(W, dtype=bool)
    for p, tab in tables.items():
        ok_b &= tab[a_W % p][a_range % p]
    b_W = int(np.argmax(ok_b))
    if not (ok_a[a_W] and ok_b[b_W]):
        raise AssertionError(f"no admissible residue pair mod {W}")
    return WNormalization(w=w, q0=q0, W=W, a_W=a_W, b_W=b_W)


def admissibility_witness(p: int, q0: int) -> tuple[int, int] | None:
    """A residue pair (t, u) mod p at which none of the eight forms vanishes, or None."""
    if not (is_prime(p) and is_prime(q0)):
        raise DomainError(f"p and q0 must be prime, got p={p}, q0={q0}")
    forms = [AffineForm(q0, a, b) for a, b in FORM_DIRECTIONS]
    first = (0, 0) if p != q0 else (1, 1)
    for t, u in [first] + [(t, u) for t in range(p) for u in range(p)]:
        if all(f(t, u) % p for f in forms):
            return t, u
    return None


def _forms_unchecked(q0: int) -> tuple[tuple[AffineForm, ...], tuple[AffineForm, ...]]:
    # No primality check on q0: the local picture at q0 = 2, 3 is part of the story.
    core = tuple(AffineForm(q0, *FORM_DIRECTIONS[i]) for i in CORE_INDICES)
    residual = tuple(AffineForm(q0, *FORM_DIRECTIONS[i]) for i in RESIDUAL_INDICES)
    return core, residual


def local_core_count(p: int, q0: int) -> int:
    core, _ = _forms_unchecked(q0)
    return count_residues(p, core)


def local_full_count(p: int, q0: int) -> int:
    core, residual = _forms_unchecked(q0)
    return count_residues(p, core + residual)


def _star_form(q0: int, star: str) -> AffineForm:
    star = _STAR_ALIASES.get(str(star).lower(), str(star).lower())
    if star not in STARS:
        raise DomainError(f"star must be one of {STARS}, got {star!r}")
    return _forms_unchecked(q0)[1][STARS.index(star)]


def g_star(p: int, q0: int, star: str | int) -> Fraction:
    """Local density of p | N_star inside the core mass, as an exact rational."""
    if (2 * q0) % p == 0:
        raise UnsupportedPrimeError(f"g_star is not defined for p={p} dividing 2*q0={2 * q0}")
    core, _ = _forms_unchecked(q0)
    num = count_residues(p, core, vanish=_star_form(q0, star))
    return Fraction(num, count_residues(p, core))


def g_multiplicative(d: int, q0: int, star: str | int) -> Fraction:
    """g_star(d) for squarefree d as the product of g_star(p) over p | d."""
    out = Fraction(1)
    for p in prime_factors(d):
        out *= g_star(p, q0, star)
    return out


def prime_factors(d: int) -> list[int]:
    out = []
    p = 2
    while p * p <= d:
        if d % p == 0:
            out.append(p)
            while d % p == 0:
                d //= p
        p += 1
    if d > 1:
        out.append(d)
    return out


def is_squarefree(d: int) -> bool:
    if d < 1:
        return False
    p = 2
    while p * p <= d:
        if d % (p * p) == 0:
            return False
        p += 1
    return True


def moebius(d: int) -> int:
    if not is_squarefree(d):
        return 0
    return -1 if len(prime_factors(d)) % 2 else 1


@dataclass(frozen=True)
class LocalRow:
    p: int
    core_count: int
    full_count: int
    g: dict  # star -> Fraction, absent when p | 2 q0
    sigma_p: float
    beta_p: float


def local_row(p: int, q0: int, W: int = 1, densities: bool = True) -> LocalRow:
    """Local factors at p; for p | W they are conditioned on the W-trick class."""
    core, residual = _forms_unchecked(q0)
    cc = count_residues(p, core)
    fc = count_residues(p, core + residual)
    if W % p == 0:
        sigma = (1 - 1 / p) ** -5
        beta = (1 - 1 / p) ** -3
    else:
        sigma = cc / p**2 * (1 - 1 / p) ** -5
        beta = fc / cc * (1 - 1 / p) ** -3
    g = {} if not densities or (2 * q0) % p == 0 else {s: Fraction(count_residues(p, core, _star_form(q0, s)), cc) for s in STARS}
    return LocalRow(p=p, core_count=cc, full_count=fc, g=g, sigma_p=sigma, beta_p=beta)


def local_table(q0: int, P: int, W: int = 1) -> list[LocalRow]:
    check_q0(q0)
    return [local_row(int(p), q0, W) for p in primes_up_to(P)]


@dataclass(frozen=True)
class SeriesReport:
    kind: str
    P: int
    value: float
    log_value: float
    tail_constant: float
    tail_bound: float  # bound on |log(full product) - log(truncated product)|


@lru_cache(maxsize=32)
def singular_series(q0: int, kind: str = "core", P: int = 10_000, w: int = 7) -> SeriesReport:
    """Truncated Euler product over p <= P of sigma_p (core) or beta_p (residual).

    Beyond P each factor is 1 + O(1/p^2).  The tail constant is the largest
    p^2 |log factor| over P/2 < p <= P, doubled, and the tail bound is
    that constant times sum_{n > P} n^-2 < 1/P.
    """
    if kind not in ("core", "residual"):
        raise DomainError(f"kind must be 'core' or 'residual', got {kind!r}")
    if P < w:
        raise DomainError(f"truncation P={P} must be >= w={w}")
    norm = compute_w_normalization(w, q0)
    logs = []
    tail_c = 0.0
    for p in primes_up_to(P).tolist():
        row = local_row(p, q0, norm.W, densities=False)
        f = row.sigma_p if kind == "core" else row.beta_p
        if f <= 0:
            raise AssertionError(f"local factor at p={p} is not positive")
        logs.append(math.log(f))
        if 2 * p > P:
            tail_c = max(tail_c, p * p * abs(logs[-1]))
    log_value = math.fsum(logs)
    tail_c *= 2
    return SeriesReport(kind, P, math.exp(log_value), log_value, tail_c, tail_c / P)
