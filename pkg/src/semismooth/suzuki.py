"""Suzuki's closed-form saddle-point approximation S(x, y).

With ``xi`` the positive root of ``e^xi = 1 + u xi`` and
``alpha_s = 1 - xi / log y``,

    S(x, y) = x^alpha_s exp(gamma + Ein(xi)) / (alpha_s sqrt(2 pi u (1 + log x / y)))

where ``Ein(xi) = int_0^xi (e^t - 1)/t dt``.  Only ``O(1)`` work per call: no
prime list is needed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import DomainError, EstimateResult, SemismoothError, SmoothnessParams
from .dickman import EULER_GAMMA

# Newton on xi - log(1 + u xi) cancels badly as u -> 1; bisect below this.
NEWTON_MIN_U = 1.01


@dataclass(frozen=True)
class XiSolution:
    u: float
    xi: float
    residual: float
    iterations: int


def _xi_bisect(u: float) -> tuple[float, int]:
    lo, hi = 1.0 - 1.0 / u, 2.0 * (u - 1.0)
    it = 0
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            return mid, it
        it += 1
        if mid - math.log1p(u * mid) < 0:
            lo = mid
        else:
            hi = mid


def _xi_newton(u: float) -> tuple[float, int]:
    xi = 2.0 * (u - 1.0)
    for it in range(1, 100):
        uxi = 1.0 + u * xi
        step = (xi - math.log(uxi)) * uxi / (1.0 + u * (xi - 1.0))
        nxt = xi - step
        # iterates decrease monotonically; stalling means we are at the root
        if nxt >= xi or step <= 4e-16 * xi:
            return min(nxt, xi), it
        xi = nxt
    return xi, 100


def solve_xi(u: float) -> XiSolution:
    """Positive root of ``e^xi = 1 + u xi`` for ``u > 1``."""
    if u <= 1:
        raise DomainError(f"xi(u) needs u > 1, got {u}")
    xi, it = _xi_bisect(u) if u < NEWTON_MIN_U else _xi_newton(u)
    return XiSolution(u, xi, math.expm1(xi) - u * xi, it)


def _xi_array(u: np.ndarray) -> np.ndarray:
    """Vectorised Newton for ``u >= NEWTON_MIN_U``; scalar bisection below."""
    xi = 2.0 * (u - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(100):
            uxi = 1.0 + u * xi
            step = (xi - np.log(uxi)) * uxi / (1.0 + u * (xi - 1.0))
            active = step > 4e-16 * xi
            if not np.any(active):
                break
            xi = np.where(active, xi - step, xi)
    small = u < NEWTON_MIN_U
    if np.any(small):
        xi[small] = [_xi_bisect(float(v))[0] for v in u[small]]
    return xi


def maclaurin_integral(xi):
    """``int_0^xi (e^t - 1)/t dt`` as ``sum_{n>=1} xi^n / (n n!)``.

    Truncated where the term at the largest ``xi`` drops below ``1e-16`` of
    its partial sum, which bounds the truncation for every smaller ``xi``.
    Accepts scalars or arrays.
    """
    x = np.asarray(xi, dtype=float)
    if np.any(x < 0):
        raise DomainError("maclaurin_integral needs xi >= 0")
    top = float(np.max(x)) if x.size else 0.0
    power = total = 0.0
    n = 0
    while True:
        n += 1
        power = top / n if n == 1 else power * top / n
        term = power / n
        total += term
        if term <= 1e-16 * total:
            break
    k = np.arange(1, n + 1, dtype=float)
    terms = np.cumprod(x.reshape(-1, 1) / k, axis=1)
    out = (terms @ (1.0 / k)).reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def log_s_values(x, y: float) -> tuple[np.ndarray, np.ndarray]:
    """``(log |S(x, y)|, alpha_s)`` for an array of ``x``, all with ``u > 1``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = math.log(y)
    u = lx / ly
    if np.any(u <= 1):
        raise DomainError("S(x, y) requires x > y (u > 1)")
    xi = _xi_array(u)
    alpha = 1.0 - xi / ly
    if np.any(alpha == 0):
        raise SemismoothError("alpha_s = 0: S(x, y) is singular")
    logs = (
        alpha * lx
        + EULER_GAMMA
        + maclaurin_integral(xi)
        - np.log(np.abs(alpha))
        - 0.5 * np.log(2.0 * math.pi * u * (1.0 + lx / y))
    )
    return logs, alpha


def s_values(x, y: float):
    """Vectorised ``S(x, y)``, with 0 wherever ``alpha_s < 0``."""
    logs, alpha = log_s_values(np.atleast_1d(x), y)
    with np.errstate(over="ignore"):
        out = np.where(alpha > 0, np.exp(logs), 0.0)
    return out if np.ndim(x) else float(out[0])


def s_estimate(x: float, y: float) -> EstimateResult:
    """Suzuki's ``S(x, y)`` as an estimate of ``Psi(x, y)``.

    When ``alpha_s <= 0`` (tiny ``y`` relative to ``x``) the formula has no
    meaningful sign and the estimate is reported as 0, flagged in the
    diagnostics.
    """
    if not 2 <= y < x:
        raise DomainError(f"need 2 <= y < x, got x={x}, y={y}")
    t0 = time.perf_counter()
    sol = solve_xi(math.log(x) / math.log(y))
    logs, alpha = log_s_values(np.array([x], dtype=float), y)
    a = float(alpha[0])
    diag = {"xi": sol.xi, "alpha_s": a, "xi_iterations": sol.iterations}
    if a > 0:
        value = math.exp(float(logs[0]))
    else:
        value = 0.0
        diag["alpha_s_nonpositive"] = True
        diag["signed_log_magnitude"] = float(logs[0])
    return EstimateResult("suzuki", SmoothnessParams(x, y, y), value, time.perf_counter() - t0, diag)
