"""Prime generation, prime counting and the logarithmic integral."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DomainError, RangeError
from .quadrature import simpson_doubling

SEGMENT_SIZE = 2**20


@dataclass(frozen=True, eq=False)
class PrimeList:
    """All primes ``<= limit`` in ascending order.

    ``primes`` is a read-only ``int64`` array, so one instance can be shared
    freely between estimators and threads.
    """

    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def __iter__(self):
        return iter(self.primes.tolist())

    def upto(self, bound: float) -> np.ndarray:
        """View of the primes ``<= bound``."""
        if math.floor(bound) > self.limit:
            raise RangeError(f"prime list stops at {self.limit}, need {bound}")
        return self.primes[: np.searchsorted(self.primes, math.floor(bound), side="right")]


def _small_primes(limit: int) -> np.ndarray:
    mark = np.ones(limit + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if mark[p]:
            mark[p * p :: p] = False
    return np.flatnonzero(mark).astype(np.int64)


def iter_prime_segments(limit: int, segment_size: int = SEGMENT_SIZE):
    """Yield arrays of the primes in consecutive windows of ``[2, limit]``."""
    base = _small_primes(math.isqrt(limit))
    lo = 2
    while lo <= limit:
        hi = min(lo + segment_size - 1, limit)
        mark = np.ones(hi - lo + 1, dtype=bool)
        for p in base.tolist():
            if p * p > hi:
                break
            start = max(p * p, -(-lo // p) * p)
            mark[start - lo :: p] = False
        yield np.flatnonzero(mark).astype(np.int64) + lo
        lo = hi + 1


def sieve_primes(limit: int, segment_size: int = SEGMENT_SIZE) -> PrimeList:
    """Segmented sieve of Eratosthenes returning every prime ``<= limit``.

    Working memory is one segment of ``segment_size`` flags plus the output.
    """
    limit = int(limit)
    if limit < 2:
        raise DomainError(f"no primes below 2 (limit={limit})")
    primes = np.concatenate(list(iter_prime_segments(limit, segment_size)))
    primes.setflags(write=False)
    return PrimeList(limit, primes)


@lru_cache(maxsize=8)
def cached_primes(limit: int) -> PrimeList:
    """Memoised :func:`sieve_primes` for the estimators' shared prime lists."""
    return sieve_primes(limit)


def prime_count(x: float, primes: PrimeList) -> int:
    """pi(x) for ``x <= primes.limit``."""
    if math.floor(x) > primes.limit:
        raise RangeError(f"x={x} exceeds prime list limit {primes.limit}")
    if x < 2:
        return 0
    return int(np.searchsorted(primes.primes, math.floor(x), side="right"))


def li(x: float, rtol: float = 1e-12) -> float:
    """Offset logarithmic integral, the integral of ``1/log t`` over ``[2, x]``.

    Integrated in ``r = log t`` (integrand ``e^r / r``), which keeps the panel
    count modest even for large ``x``.
    """
    if x < 2:
        raise DomainError(f"li(x) requires x >= 2, got {x}")
    if x == 2:
        return 0.0
    res = simpson_doubling(
        lambda r: np.exp(r) / r, math.log(2.0), math.log(x), rtol=rtol, max_panels=2**22
    )
    return res.value


def pi_error(x: float, primes: PrimeList) -> float:
    """e(x) = pi(x) - li(x)."""
    if x < 2:
        raise DomainError(f"pi_error requires x >= 2, got {x}")
    return prime_count(x, primes) - li(x)
