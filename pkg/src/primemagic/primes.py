"""Primality, sieving and the arithmetic weights theta and Lambda."""

from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResourceError

# Bases sufficient for a deterministic strong-pseudoprime test below 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_SMALL_PRIMES = _MR_BASES

MAX_SIEVE_ENTRIES = 1 << 28
MAX_TABLE_ENTRIES = 1 << 27


class WeightKind(str, enum.Enum):
    THETA = "theta"
    LAMBDA = "lambda"
    INDICATOR = "indicator"


def is_prime(n: int) -> bool:
    n = int(n)
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _iroot(n: int, k: int) -> int:
    """Largest r with r**k <= n."""
    if k == 2:
        return math.isqrt(n)
    r = int(round(n ** (1.0 / k)))
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def prime_power_base(n: int) -> tuple[int, int] | None:
    """Return (p, k) with n == p**k, p prime, k >= 1, or None."""
    if n < 2:
        return None
    if is_prime(n):
        return n, 1
    for k in range(2, n.bit_length() + 1):
        r = _iroot(n, k)
        if r < 2:
            break
        if r**k == n and is_prime(r):
            return r, k
    return None


def weight(kind: WeightKind | str, n: int) -> float:
    kind = WeightKind(kind)
    if n < 1:
        raise DomainError(f"weight is defined for n >= 1, got {n}")
    if kind is WeightKind.LAMBDA:
        pk = prime_power_base(n)
        return math.log(pk[0]) if pk else 0.0
    if not is_prime(n):
        return 0.0
    return math.log(n) if kind is WeightKind.THETA else 1.0


@lru_cache(maxsize=8)
def _base_sieve(limit: int) -> np.ndarray:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


def primes_up_to(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(prime_table(n)[: n + 1]).astype(np.int64)


def sieve_range(lo: int, hi: int, max_entries: int = MAX_SIEVE_ENTRIES) -> np.ndarray:
    """Boolean array whose entry i is True iff lo + i is prime, for lo <= n < hi."""
    if not (2 <= lo < hi <= 1 << 62):
        raise DomainError(f"need 2 <= lo < hi <= 2**62, got [{lo}, {hi})")
    root = math.isqrt(hi - 1)
    if hi - lo > max_entries or root > max_entries:
        raise ResourceError(f"window [{lo}, {hi}) exceeds sieve budget of {max_entries} entries")
    # Round the base limit up so that nearby windows share one cached base sieve.
    base_limit = 1 << max(root, 1).bit_length()
    base = np.flatnonzero(_base_sieve(base_limit))
    base = base[base <= root]
    flags = np.ones(hi - lo, dtype=bool)
    for p in base.tolist():
        start = max(p * p, -(-lo // p) * p)
        if start < hi:
            flags[start - lo :: p] = False
    return flags


class _GrowingTable:
    def __init__(self, build):
        self._build = build
        self._data = build(1 << 10)

    def get(self, n: int) -> np.ndarray:
        if n >= len(self._data):
            if n >= MAX_TABLE_ENTRIES:
                raise ResourceError(f"table up to {n} exceeds {MAX_TABLE_ENTRIES} entries")
            size = len(self._data)
            while size <= n:
                size *= 2
            self._data = self._build(min(size, MAX_TABLE_ENTRIES))
        return self._data


def _build_prime_flags(size: int) -> np.ndarray:
    flags = np.ones(size, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(size - 1) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return flags


def _build_lambda(size: int) -> np.ndarray:
    flags = _PRIME_FLAGS.get(size - 1)[:size]
    out = np.zeros(size, dtype=np.float64)
    for p in np.flatnonzero(flags).tolist():
        lp = math.log(p)
        q = p
        while q < size:
            out[q] = lp
            q *= p
    return out


def _build_theta(size: int) -> np.ndarray:
    flags = _PRIME_FLAGS.get(size - 1)[:size]
    out = np.zeros(size, dtype=np.float64)
    idx = np.flatnonzero(flags)
    out[idx] = np.log(idx.astype(np.float64))
    return out


_PRIME_FLAGS = _GrowingTable(_build_prime_flags)
_WEIGHT_TABLES = {
    WeightKind.THETA: _GrowingTable(_build_theta),
    WeightKind.LAMBDA: _GrowingTable(_build_lambda),
    WeightKind.INDICATOR: _GrowingTable(lambda size: _PRIME_FLAGS.get(size - 1)[:size].astype(np.float64)),
}


def prime_table(n: int) -> np.ndarray:
    """Boolean primality flags covering 0..n (possibly longer)."""
    return _PRIME_FLAGS.get(n)


def weight_table(kind: WeightKind | str, n: int) -> np.ndarray:
    """Float array w with w[k] = weight(kind, k) for 1 <= k <= n (w[0] = 0)."""
    return _WEIGHT_TABLES[WeightKind(kind)].get(n)


def prime_powers_up_to(n: int, min_exponent: int = 2) -> np.ndarray:
    """Sorted array of p**k <= n with k >= min_exponent."""
    out = []
    for p in primes_up_to(_iroot(max(n, 1), min_exponent)).tolist():
        q = p**min_exponent
        while q <= n:
            out.append(q)
            q *= p
    return np.array(sorted(out), dtype=np.int64)


def prime_power_scan(form, X: int, rows: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None) -> int:
    """Count lattice points where an affine form takes a value p**k with k >= 2.

    ``form`` is a (const, coeff_m, coeff_n) triple.  The window is the box
    [1, X]^2 unless ``rows`` gives an explicit region as (m, n_lo, n_hi) arrays,
    one interval of n per row m.
    """
    c, a, b = (int(v) for v in form)
    if a == 0 and b == 0:
        raise DomainError("prime_power_scan needs a nonconstant form")
    if rows is None:
        if X < 1:
            return 0
        m = np.arange(1, X + 1, dtype=np.int64)
        lo = np.ones_like(m)
        hi = np.full_like(m, X)
    else:
        m, lo, hi = (np.asarray(v, dtype=np.int64) for v in rows)
    if m.size == 0:
        return 0
    corners = [c + a * mm + b * nn for mm in (m.min(), m.max()) for nn in (lo.min(), hi.max())]
    vmax = int(max(corners))
    if vmax < 4:
        return 0
    base = c + a * m
    total = 0
    for v in prime_powers_up_to(vmax).tolist():
        if b == 0:
            total += int((hi - lo + 1)[base == v].sum())
            continue
        rem = v - base
        ok = rem % b == 0
        n = rem // b
        total += int(np.count_nonzero(ok & (n >= lo) & (n <= hi)))
    return total
