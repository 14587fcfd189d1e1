"""Shared parameter/result types and error classes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


class SemismoothError(Exception):
    """Base class for errors raised by this package."""


class DomainError(SemismoothError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(SemismoothError, ValueError):
    """A precomputed resource (prime list, rho table) does not cover the request."""


@dataclass(frozen=True)
class SmoothnessParams:
    """The triple ``(x, y, z)`` with ``2 <= y <= z <= x``.

    ``u = log x / log y`` and ``v = log x / log z`` are derived on access.
    """

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (2 <= self.y <= self.z <= self.x):
            raise DomainError(
                f"need 2 <= y <= z <= x, got x={self.x}, y={self.y}, z={self.z}"
            )

    @property
    def u(self) -> float:
        return math.log(self.x) / math.log(self.y)

    @property
    def v(self) -> float:
        return math.log(self.x) / math.log(self.z)


@dataclass
class EstimateResult:
    """One estimate of a smooth or semismooth count.

    ``diagnostics`` carries whatever the producing routine found worth
    reporting: quadrature panel counts, Newton iterations, convergence flags.
    """

    tag: str
    params: SmoothnessParams | None
    value: float
    elapsed_seconds: float = 0.0
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def ratio(self, exact: float) -> float:
        return self.value / exact
