"""Exception types shared across the package."""


class SmallObstructionError(ValueError):
    """q0 is 2 or 3; no magic square of distinct primes can contain it."""


class NotPrimeError(ValueError):
    pass


class NotMagicError(ValueError):
    pass


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedPrimeError(DomainError):
    pass


class ResourceError(RuntimeError):
    """A requested computation exceeds the configured memory budget."""


class SearchExhausted(RuntimeError):
    def __init__(self, q0: int, strategy: str, candidates_tested: int):
        super().__init__(
            f"no solution for q0={q0} within {candidates_tested} candidates ({strategy})"
        )
        self.q0 = q0
        self.strategy = strategy
        self.candidates_tested = candidates_tested
