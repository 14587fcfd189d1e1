"""Exact smooth and semismooth counts by segmented sieving.

Every ``n`` in a window is fully factored by dividing out each sieving prime
(with multiplicity); what we keep is the pair

* ``p1 = P(n)``, the largest prime factor (1 for ``n = 1``), and
* ``p2 = P(n / p1)``, the largest prime factor of the cofactor.

``n`` is ``(y, z)``-semismooth exactly when ``p1 <= z`` and ``p2 <= y``, so a
2-D histogram of ``(p2, p1)`` over threshold buckets followed by a 2-D prefix
sum yields the whole ``Psi(x, y, z)`` grid from one pass.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .core import DomainError, RangeError, SmoothnessParams
from .primes import SEGMENT_SIZE, PrimeList, sieve_primes

__all__ = [
    "EXACT_CEILING",
    "ExactCountTable",
    "ExactPsiCounter",
    "FactorProfile",
    "SmoothnessParams",
    "exact_psi",
    "exact_psi_table",
    "factor_profile_segment",
    "load_fixture",
    "segment_profiles",
    "table1_fixture_path",
    "write_fixture",
]

# Desk-scale limit; larger x needs allow_big=True.
EXACT_CEILING = 2**34


class FactorProfile(NamedTuple):
    n: int
    p1: int
    p2: int

    def is_semismooth(self, y: float, z: float) -> bool:
        return self.p1 <= z and self.p2 <= y


def segment_profiles(lo: int, hi: int, primes: PrimeList) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(p1, p2)`` for every ``n`` in ``[lo, hi]``.

    ``primes`` must reach ``isqrt(hi)``.
    """
    if lo < 1 or hi < lo:
        raise DomainError(f"bad segment [{lo}, {hi}]")
    root = math.isqrt(hi)
    if primes.limit < root:
        raise RangeError(f"sieving [{lo}, {hi}] needs primes up to {root}, have {primes.limit}")
    rem = np.arange(lo, hi + 1, dtype=np.int64)
    p1 = np.ones_like(rem)
    p2 = np.ones_like(rem)
    for p in primes.upto(root).tolist():
        pk = p
        while pk <= hi:
            sl = slice((-lo) % pk, None, pk)
            p2[sl] = p1[sl]
            p1[sl] = p
            rem[sl] //= p
            pk *= p
    big = rem > 1
    p2[big] = p1[big]
    p1[big] = rem[big]
    return p1, p2


def factor_profile_segment(lo: int, hi: int, primes: PrimeList) -> Iterator[FactorProfile]:
    """Yield the :class:`FactorProfile` of each ``n`` in ``[lo, hi]``."""
    p1, p2 = segment_profiles(lo, hi, primes)
    for n, a, b in zip(range(lo, hi + 1), p1.tolist(), p2.tolist()):
        yield FactorProfile(n, a, b)


@dataclass
class ExactCountTable:
    """``counts[i, j] = Psi(x, y_grid[i], z_grid[j])``; ``-1`` where ``y > z``."""

    x: int
    y_grid: list[int]
    z_grid: list[int]
    counts: np.ndarray

    def defined(self, i: int, j: int) -> bool:
        return self.y_grid[i] <= self.z_grid[j]

    def cell(self, y: int, z: int) -> int:
        i = self.y_grid.index(y)
        j = self.z_grid.index(z)
        if not self.defined(i, j):
            raise KeyError(f"cell (y={y}, z={z}) undefined: y > z")
        return int(self.counts[i, j])

    def rows(self) -> Iterator[tuple[int, int, int, int]]:
        """``(x, y, z, count)`` for every defined cell."""
        for i, y in enumerate(self.y_grid):
            for j, z in enumerate(self.z_grid):
                if y <= z:
                    yield self.x, y, z, int(self.counts[i, j])


def _check_grid(grid: Sequence[int], name: str) -> list[int]:
    g = [int(v) for v in grid]
    if not g or any(b <= a for a, b in zip(g, g[1:])):
        raise DomainError(f"{name} must be non-empty and strictly ascending: {g}")
    return g


def _segment_histogram(lo, hi, primes, y_grid, z_grid):
    p1, p2 = segment_profiles(lo, hi, primes)
    ny, nz = len(y_grid), len(z_grid)
    yi = np.searchsorted(np.asarray(y_grid, dtype=np.int64), p2, side="left")
    zi = np.searchsorted(np.asarray(z_grid, dtype=np.int64), p1, side="left")
    flat = yi * (nz + 1) + zi
    return np.bincount(flat, minlength=(ny + 1) * (nz + 1)).astype(np.int64)


def exact_psi_table(
    x: int,
    y_grid: Sequence[int],
    z_grid: Sequence[int],
    *,
    segment_size: int = SEGMENT_SIZE,
    workers: int = 1,
    allow_big: bool = False,
) -> ExactCountTable:
    """Exact ``Psi(x, y, z)`` for every ``y`` in ``y_grid`` and ``z`` in ``z_grid``.

    One sieve pass over ``[1, x]``; per-segment histograms are summed, so a
    multi-process run (``workers > 1``) gives identical counts.
    """
    x = int(x)
    y_grid = _check_grid(y_grid, "y_grid")
    z_grid = _check_grid(z_grid, "z_grid")
    if x < 1:
        raise DomainError(f"x must be positive, got {x}")
    if x > EXACT_CEILING and not allow_big:
        raise DomainError(
            f"exact count at x={x} exceeds the desk-scale ceiling 2^34; pass allow_big=True"
        )
    ny, nz = len(y_grid), len(z_grid)
    primes = sieve_primes(max(2, math.isqrt(x)))
    bounds = [(lo, min(lo + segment_size - 1, x)) for lo in range(1, x + 1, segment_size)]
    hist = np.zeros((ny + 1) * (nz + 1), dtype=np.int64)
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_segment_histogram, lo, hi, primes, y_grid, z_grid)
                for lo, hi in bounds
            ]
            for fut in futures:
                hist += fut.result()
    else:
        for lo, hi in bounds:
            hist += _segment_histogram(lo, hi, primes, y_grid, z_grid)
    counts = hist.reshape(ny + 1, nz + 1)[:ny, :nz].cumsum(axis=0).cumsum(axis=1)
    for i, y in enumerate(y_grid):
        for j, z in enumerate(z_grid):
            if y > z:
                counts[i, j] = -1
    return ExactCountTable(x, y_grid, z_grid, counts)


def exact_psi(x: float, y: float, **kwargs) -> int:
    """Number of ``n <= x`` whose largest prime factor is at most ``y``.

    ``n = 1`` is always counted.
    """
    n = math.floor(x)
    if n < 1:
        return 0
    if y >= n:
        return n
    if y < 2:
        return 1
    yy = math.floor(y)
    return exact_psi_table(n, [yy], [yy], **kwargs).cell(yy, yy)


class ExactPsiCounter:
    """Answers ``Psi(t, y)`` for all ``t <= limit`` from one sieve pass.

    Holds the largest prime factor of every ``n <= limit`` and, per ``y``
    queried, a prefix count of ``y``-smooth integers.  Suited to the many
    ``Psi(x/p, y)`` lookups of the prime-sum Buchstab estimate.
    """

    def __init__(self, limit: int):
        self.limit = int(limit)
        primes = sieve_primes(max(2, math.isqrt(self.limit)))
        self.largest = np.empty(self.limit + 1, dtype=np.int64)
        self.largest[0] = 0
        for lo in range(1, self.limit + 1, SEGMENT_SIZE):
            hi = min(lo + SEGMENT_SIZE - 1, self.limit)
            self.largest[lo : hi + 1] = segment_profiles(lo, hi, primes)[0]
        self._prefix: dict[int, np.ndarray] = {}

    def _prefix_for(self, y: int) -> np.ndarray:
        pre = self._prefix.get(y)
        if pre is None:
            smooth = self.largest <= y
            smooth[0] = False
            pre = np.cumsum(smooth, dtype=np.int64)
            self._prefix[y] = pre
        return pre

    def psi(self, x, y: float):
        """``Psi(x, y)``; ``x`` may be a scalar or an array."""
        t = np.floor(np.asarray(x, dtype=float)).astype(np.int64)
        if np.any(t > self.limit):
            raise RangeError(f"counter built to {self.limit}, asked for {t.max()}")
        t = np.maximum(t, 0)
        out = self._prefix_for(math.floor(y))[t]
        return int(out) if out.ndim == 0 else out


# -- fixture files -------------------------------------------------------------

def table1_fixture_path() -> Path:
    """Path of the bundled ``x = 2^40`` exact-count fixture."""
    return Path(str(resources.files("semismooth") / "fixtures" / "table1.csv"))


def load_fixture(path: str | Path | None = None) -> dict[tuple[int, int, int], int]:
    """Read an ``x,y,z,count`` CSV into a ``{(x, y, z): count}`` dict."""
    path = table1_fixture_path() if path is None else Path(path)
    out: dict[tuple[int, int, int], int] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["x", "y", "z", "count"]:
            raise ValueError(f"{path}: expected header x,y,z,count, got {reader.fieldnames}")
        for row in reader:
            out[int(row["x"]), int(row["y"]), int(row["z"])] = int(row["count"])
    return out


def write_fixture(table: ExactCountTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z", "count"])
        w.writerows(table.rows())
