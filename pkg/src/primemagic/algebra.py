"""Exact integer algebra of 3x3 magic squares and the eight moving forms.

A 3x3 magic square is determined by its center ``e`` and two offsets
``t = a - e``, ``u = c - e``::

    e+t      e-u-t    e+u
    e-t+u    e        e+t-u
    e-u      e+u+t    e-t

Placing a fixed prime q0 at cell (1, 2) forces ``e = q0 + t + u`` and leaves
eight affine forms in (t, u) that must all be prime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .errors import NotMagicError, NotPrimeError, SmallObstructionError
from .primes import is_prime

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1

# (row, col) triples of the eight lines: 3 rows, 3 columns, 2 diagonals.
LINES = (
    ((0, 0), (0, 1), (0, 2)),
    ((1, 0), (1, 1), (1, 2)),
    ((2, 0), (2, 1), (2, 2)),
    ((0, 0), (1, 0), (2, 0)),
    ((0, 1), (1, 1), (2, 1)),
    ((0, 2), (1, 2), (2, 2)),
    ((0, 0), (1, 1), (2, 2)),
    ((0, 2), (1, 1), (2, 0)),
)
OPPOSITE_PAIRS = (((0, 0), (2, 2)), ((0, 1), (2, 1)), ((0, 2), (2, 0)), ((1, 0), (1, 2)))


def _checked(v: int) -> int:
    if not INT64_MIN <= v <= INT64_MAX:
        raise OverflowError(f"value {v} does not fit in a signed 64-bit integer")
    return v


@dataclass(frozen=True)
class MagicSquare:
    rows: tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]

    @classmethod
    def from_entries(cls, entries: Sequence[int]) -> "MagicSquare":
        """Build from nine row-major entries; the result need not be magic."""
        vals = [_checked(int(v)) for v in entries]
        if len(vals) != 9:
            raise ValueError(f"a 3x3 square needs 9 entries, got {len(vals)}")
        return cls((tuple(vals[0:3]), tuple(vals[3:6]), tuple(vals[6:9])))

    @classmethod
    def parse(cls, text: str) -> "MagicSquare":
        return cls.from_entries([int(x) for x in text.replace(";", ",").split(",") if x.strip()])

    @property
    def entries(self) -> tuple[int, ...]:
        return self.rows[0] + self.rows[1] + self.rows[2]

    @property
    def center(self) -> int:
        return self.rows[1][1]

    def __getitem__(self, rc: tuple[int, int]) -> int:
        return self.rows[rc[0]][rc[1]]

    def line_sums(self) -> list[int]:
        return [sum(self[rc] for rc in line) for line in LINES]

    def is_magic(self) -> bool:
        return len(set(self.line_sums())) == 1

    @property
    def magic_constant(self) -> int:
        sums = self.line_sums()
        if len(set(sums)) != 1:
            raise NotMagicError(f"line sums differ: {sums}")
        return sums[0]

    def to_csv(self) -> str:
        return ",".join(str(v) for v in self.entries)

    def __str__(self) -> str:
        width = max(len(str(v)) for v in self.entries)
        return "\n".join(" ".join(str(v).rjust(width) for v in row) for row in self.rows)


class ParamTriple(NamedTuple):
    e: int
    t: int
    u: int


def square_from_center_params(e: int, t: int, u: int) -> MagicSquare:
    return MagicSquare.from_entries(
        [
            e + t, e - u - t, e + u,
            e - t + u, e, e + t - u,
            e - u, e + u + t, e - t,
        ]
    )  # fmt: skip


def params_from_square(sq: MagicSquare) -> ParamTriple:
    sq.magic_constant  # raises NotMagicError
    e = sq.center
    return ParamTriple(e, sq[0, 0] - e, sq[0, 2] - e)


class AffineForm(NamedTuple):
    """const + coeff_t * t + coeff_u * u."""

    const: int
    coeff_t: int
    coeff_u: int

    def __call__(self, t, u):
        return self.const + self.coeff_t * t + self.coeff_u * u

    @property
    def direction(self) -> tuple[int, int]:
        return self.coeff_t, self.coeff_u


# Homogeneous parts of L1..L8, in the fixed column order.
FORM_DIRECTIONS = ((2, 1), (1, 2), (0, 2), (1, 1), (2, 0), (1, 0), (2, 2), (0, 1))
FORM_NAMES = ("L1", "L2", "L3", "L4", "L5", "L6", "L7", "L8")
# A1..A5 = q0+t, q0+u, q0+t+u, q0+u+2t, q0+2u+t as indices into L1..L8.
CORE_INDICES = (5, 7, 3, 0, 1)
# B1..B3 = q0+2t, q0+2u, q0+2t+2u.
RESIDUAL_INDICES = (4, 2, 6)
# Square cell holding each of L1..L8 in M_{q0}(t, u).
FORM_CELLS = ((0, 0), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2))


def check_q0(q0: int) -> None:
    if q0 in (2, 3):
        raise SmallObstructionError(f"q0={q0}: no magic square of distinct primes contains {q0}")
    if not is_prime(q0):
        raise NotPrimeError(f"q0={q0} is not prime")


@dataclass(frozen=True)
class FormSystem:
    q0: int
    forms: tuple[AffineForm, ...] = field(init=False)

    def __post_init__(self):
        check_q0(self.q0)
        object.__setattr__(
            self, "forms", tuple(AffineForm(self.q0, a, b) for a, b in FORM_DIRECTIONS)
        )

    @property
    def core(self) -> tuple[AffineForm, ...]:
        return tuple(self.forms[i] for i in CORE_INDICES)

    @property
    def residuals(self) -> tuple[AffineForm, ...]:
        return tuple(self.forms[i] for i in RESIDUAL_INDICES)

    def w_tricked(self, W: int, a_W: int, b_W: int) -> tuple[tuple[AffineForm, ...], tuple[AffineForm, ...]]:
        """Core and residual forms in the variables (m, n) with t = a_W + W m, u = b_W + W n."""

        def sub(f: AffineForm) -> AffineForm:
            return AffineForm(f(a_W, b_W), W * f.coeff_t, W * f.coeff_u)

        return tuple(sub(f) for f in self.core), tuple(sub(f) for f in self.residuals)

    def square(self, t: int, u: int) -> MagicSquare:
        return square_from_center_params(self.q0 + t + u, t, u)


def forms_for(q0: int) -> FormSystem:
    return FormSystem(q0)


def evaluate_forms(fs: FormSystem, t: int, u: int) -> list[int]:
    return [_checked(f(t, u)) for f in fs.forms]


def proportional(d1: tuple[int, int], d2: tuple[int, int]) -> bool:
    return d1[0] * d2[1] - d1[1] * d2[0] == 0


def pairwise_nonproportional(directions: Sequence[tuple[int, int]]) -> bool:
    return all(
        not proportional(directions[i], directions[j])
        for i in range(len(directions))
        for j in range(i + 1, len(directions))
    )


def residual_dependencies(fs: FormSystem) -> list[tuple[AffineForm, AffineForm]]:
    """Pairs (B, A) with B = 2*A - q0 coefficientwise: q0+2t, q0+2u, q0+2t+2u."""
    a = fs.core
    return list(zip(fs.residuals, (a[0], a[1], a[2])))


@dataclass
class VerificationReport:
    is_magic: bool
    all_positive: bool
    all_prime: bool
    all_distinct: bool
    contains_q0: bool
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.passed


def verify_prime_magic(sq: MagicSquare, q0: int) -> VerificationReport:
    vals = sq.entries
    failures = []
    sums = sq.line_sums()
    is_magic = len(set(sums)) == 1
    if not is_magic:
        failures.append(f"line sums differ: {sums}")
    nonpos = [v for v in vals if v <= 0]
    if nonpos:
        failures.append(f"nonpositive entries: {nonpos}")
    composite = [v for v in vals if not is_prime(v)]
    if composite:
        failures.append(f"non-prime entries: {sorted(set(composite))}")
    repeated = sorted({v for v in vals if vals.count(v) > 1})
    if repeated:
        failures.append(f"repeated entries: {repeated}")
    if q0 not in vals:
        failures.append(f"q0={q0} does not occur")
    return VerificationReport(
        is_magic=is_magic,
        all_positive=not nonpos,
        all_prime=not composite,
        all_distinct=not repeated,
        contains_q0=q0 in vals,
        failures=failures,
    )
