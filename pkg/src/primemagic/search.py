"""Search for (t, u) making all eight forms prime.

Candidates are generated in blocks of numpy arrays, in a fixed canonical
order, so the first solution found is reproducible and independent of block
sizes.  Orders:

* ``lex``: 0 < t < u, ordered by t + u (the magic constant is 3(q0 + t + u)),
  then by t.
* ``region``: the subset of ``lex`` inside the cone 4t <= 3u <= 5t, which is
  the union of all dilations N*K.
* ``wtrick``: t = a_W + W m, u = b_W + W n with m, n >= 0, ordered by m + n,
  then by m.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .algebra import FORM_DIRECTIONS, FormSystem, MagicSquare, forms_for, verify_prime_magic
from .errors import DomainError, SearchExhausted
from .geometry import Cutoff, in_region, support_lattice, support_shift_check
from .local import WNormalization, compute_w_normalization
from .primes import MAX_TABLE_ENTRIES, is_prime, prime_table

# Indices of L1..L8 sorted by the offsets t < u < 2t < t+u < 2u < u+2t < 2u+t < 2u+2t.
CHECK_ORDER = (5, 7, 4, 3, 2, 0, 1, 6)
DEFAULT_BUDGET = 50_000_000
_TABLE_LIMIT = MAX_TABLE_ENTRIES // 2


class Strategy(str, enum.Enum):
    LEX = "lex"
    REGION = "region"
    WTRICK = "wtrick"


@dataclass
class SolutionRecord:
    q0: int
    t: int
    u: int
    square: MagicSquare
    magic_constant: int
    strategy: str
    candidates_tested: int
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["square"] = list(self.square.entries)
        return d


def _expand(levels: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate the ranges [lo_k, hi_k] tagged with their level."""
    counts = np.maximum(hi - lo + 1, 0)
    total = int(counts.sum())
    lev = np.repeat(levels, counts)
    offsets = np.repeat(lo - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    return lev, offsets + np.arange(total, dtype=np.int64)


def _generate_blocks(strategy: Strategy, norm: WNormalization | None, level: int = 0, width: int = 64):
    """Yield (t, u, next_level, next_width); the last two let a consumer resume."""
    while True:
        levels = np.arange(level, level + width, dtype=np.int64)
        if strategy is Strategy.WTRICK:
            W, a, b = norm.W, norm.a_W, norm.b_W
            k, m = _expand(levels, np.zeros_like(levels), levels)
            t, u = a + W * m, b + W * (k - m)
        else:
            if strategy is Strategy.LEX:
                lo, hi = np.ones_like(levels), (levels - 1) // 2
            else:
                lo, hi = -(-3 * levels // 8), 3 * levels // 7
            s, t = _expand(levels, lo, hi)
            u = s - t
        keep = offsets_distinct(t, u)
        level += width
        width = min(2 * width, 4096)
        yield t[keep], u[keep], level, width


# The lex and region orders do not depend on q0; scans reuse their blocks.
_BLOCK_CACHE: dict[Strategy, list] = {}
_BLOCK_CACHE_LIMIT = 8_000_000


def candidate_blocks(strategy: Strategy, norm: WNormalization | None = None) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (t, u) arrays in canonical order; only pairs with nine distinct square entries."""
    strategy = Strategy(strategy)
    if strategy is Strategy.WTRICK:
        for t, u, _, _ in _generate_blocks(strategy, norm):
            yield t, u
        return
    blocks = _BLOCK_CACHE.setdefault(strategy, [])
    i, level, width = 0, 0, 64
    while True:
        if i < len(blocks):
            t, u, level, width = blocks[i]
        else:
            t, u, level, width = next(_generate_blocks(strategy, None, level, width))
            if i == len(blocks) and sum(b[0].size for b in blocks) < _BLOCK_CACHE_LIMIT:
                blocks.append((t, u, level, width))
        i += 1
        yield t, u


def offsets_distinct(t: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Positive offsets, all eight pairwise distinct, so the nine entries are distinct primes-to-be."""
    offs = [a * t + b * u for a, b in FORM_DIRECTIONS]
    ok = np.ones(t.shape, dtype=bool)
    for i in range(8):
        ok &= offs[i] > 0
        for j in range(i + 1, 8):
            ok &= offs[i] != offs[j]
    return ok


def _first_all_prime(fs: FormSystem, t: np.ndarray, u: np.ndarray) -> int | None:
    """Index of the first pair with all eight forms prime, testing smallest values first."""
    if t.size == 0:
        return None
    vmax = int(fs.q0 + 2 * (t.max() + u.max()))
    idx = np.arange(t.size)
    if vmax < _TABLE_LIMIT:
        flags = prime_table(vmax)
        for j in CHECK_ORDER:
            f = fs.forms[j]
            idx = idx[flags[f(t[idx], u[idx])]]
            if idx.size == 0:
                return None
        return int(idx[0])
    for i, tt, uu in zip(idx.tolist(), t.tolist(), u.tolist()):
        if all(is_prime(fs.forms[j](tt, uu)) for j in CHECK_ORDER):
            return i
    return None


def find_solution(q0: int, strategy: Strategy | str = Strategy.LEX, budget: int = DEFAULT_BUDGET, w: int = 7) -> SolutionRecord:
    """First (t, u) in the strategy's canonical order giving a prime magic square containing q0.

    Raises SmallObstructionError for q0 in {2, 3} and SearchExhausted when
    ``budget`` candidates have been tested without success.
    """
    start = time.perf_counter()
    fs = forms_for(q0)
    strategy = Strategy(strategy)
    norm = compute_w_normalization(w, q0) if strategy is Strategy.WTRICK else None
    tested = 0
    for t, u in candidate_blocks(strategy, norm):
        if tested + t.size > budget:
            t, u = t[: budget - tested], u[: budget - tested]
        hit = _first_all_prime(fs, t, u)
        if hit is not None:
            tt, uu = int(t[hit]), int(u[hit])
            sq = fs.square(tt, uu)
            report = verify_prime_magic(sq, q0)
            if not report.passed:
                raise AssertionError(f"search produced an invalid square: {report.failures}")
            return SolutionRecord(
                q0=q0,
                t=tt,
                u=uu,
                square=sq,
                magic_constant=sq.magic_constant,
                strategy=strategy.value,
                candidates_tested=tested + hit + 1,
                wall_time=time.perf_counter() - start,
            )
        tested += t.size
        if tested >= budget:
            raise SearchExhausted(q0, strategy.value, tested)


def lex_rank(t: int, u: int) -> int:
    """1-based position of (t, u) among ``lex`` candidates (distinct pairs only)."""
    s = t + u
    levels = np.arange(s, dtype=np.int64)
    ls, lt = _expand(levels, np.ones_like(levels), (levels - 1) // 2)
    before = int(offsets_distinct(lt, ls - lt).sum())
    ts = np.arange(1, t + 1, dtype=np.int64)
    return before + int(offsets_distinct(ts, s - ts).sum())


@dataclass
class ScanRow:
    q0: int
    found: bool
    t: int | None
    u: int | None
    magic_constant: int | None
    candidates_tested: int


@dataclass
class ScanSummary:
    rows: list[ScanRow]

    @property
    def success_rate(self) -> float:
        return sum(r.found for r in self.rows) / len(self.rows) if self.rows else 1.0


def _scan_one(args) -> ScanRow:
    q0, strategy, budget, w = args
    try:
        rec = find_solution(q0, strategy, budget, w)
    except SearchExhausted as exc:
        return ScanRow(q0, False, None, None, None, exc.candidates_tested)
    return ScanRow(q0, True, rec.t, rec.u, rec.magic_constant, rec.candidates_tested)


def scan_primes(q0_max: int, strategy: Strategy | str = Strategy.LEX, per_q0_budget: int = DEFAULT_BUDGET, w: int = 7, threads: int = 1) -> ScanSummary:
    """One row per prime 5 <= q0 <= q0_max, in increasing q0."""
    qs = [q for q in range(5, q0_max + 1) if is_prime(q)]
    jobs = [(q, Strategy(strategy).value, per_q0_budget, w) for q in qs]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_scan_one, jobs, chunksize=16))
    else:
        rows = [_scan_one(j) for j in jobs]
    return ScanSummary(rows)


@dataclass(frozen=True)
class Witness:
    X: int
    m: int
    n: int
    t: int
    u: int

    def in_dilated_region(self, W: int) -> bool:
        N = W * self.X
        return in_region(Fraction(self.t, N), Fraction(self.u, N))


def positivity_witness(q0: int, X: int, norm: WNormalization, cutoff: Cutoff) -> Witness | None:
    """First (m, n) in R_X, lexicographically, where all eight W-tricked forms are prime."""
    if not support_shift_check(cutoff, norm.W, norm.a_W, norm.b_W, X):
        raise DomainError(f"X={X} is below the support compatibility threshold")
    fs = forms_for(q0)
    m, n, _ = support_lattice(cutoff, X)
    t, u = norm.a_W + norm.W * m, norm.b_W + norm.W * n
    hit = _first_all_prime(fs, t, u)
    if hit is None:
        return None
    return Witness(X, int(m[hit]), int(n[hit]), int(t[hit]), int(u[hit]))


def doubling_witness(q0: int, norm: WNormalization, cutoff: Cutoff, X_start: int = 1, X_max: int = 1 << 12) -> Witness | None:
    """Run :func:`positivity_witness` on X_start, 2 X_start, ... up to X_max."""
    X = X_start
    while X <= X_max:
        if support_shift_check(cutoff, norm.W, norm.a_W, norm.b_W, X):
            wit = positivity_witness(q0, X, norm, cutoff)
            if wit is not None:
                return wit
        X *= 2
    return None
