"""Prime 3x3 magic squares through a prescribed prime, and the sums that count them."""

__version__ = "0.1.0"

from .algebra import AffineForm, FormSystem, MagicSquare, forms_for, verify_prime_magic
from .errors import (
    DomainError,
    NotMagicError,
    NotPrimeError,
    ResourceError,
    SearchExhausted,
    SmallObstructionError,
    UnsupportedPrimeError,
)
from .geometry import Cutoff
from .local import compute_w_normalization, g_star, singular_series
from .primes import WeightKind, is_prime
from .search import Strategy, find_solution, scan_primes

__all__ = [
    "AffineForm",
    "Cutoff",
    "DomainError",
    "FormSystem",
    "MagicSquare",
    "NotMagicError",
    "NotPrimeError",
    "ResourceError",
    "SearchExhausted",
    "SmallObstructionError",
    "Strategy",
    "UnsupportedPrimeError",
    "WeightKind",
    "compute_w_normalization",
    "find_solution",
    "forms_for",
    "g_star",
    "is_prime",
    "scan_primes",
    "singular_series",
    "verify_prime_magic",
]
