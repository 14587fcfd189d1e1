"""Dickman's rho, the Bach-Peralta sigma, and Ekkelkamp's corrected estimate.

rho is tabulated one unit interval at a time from the integral form

    u rho(u) = int_{u-1}^u rho(t) dt,

which, unlike integrating rho' = -rho(u-1)/u forward from rho(k), does not
amplify earlier errors by ~u*log(u) per unit step.
Samples on ``[k, k+1]`` are kept relative to ``rho(k)`` together with
``log rho(k)``, so the table never underflows even though ``rho(300)`` is far
below the smallest double; :func:`rho` itself flushes to 0 below ~1e-308.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .core import DomainError, EstimateResult, RangeError, SmoothnessParams
from .quadrature import simpson_doubling

EULER_GAMMA = 0.57721566490153286061

DEFAULT_U_MAX = 300.0
DEFAULT_STEPS_PER_UNIT = 256
SIGMA_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RhoTable:
    """rho sampled at step ``1/steps_per_unit`` on ``[0, u_max]``.

    ``scaled[k, j] = rho(k + j*h) / rho(k)`` and ``log_base[k] = log rho(k)``;
    ``dscaled`` holds the matching derivatives ``rho'(u) / rho(k)`` used for
    Hermite interpolation.
    """

    u_max: float
    steps_per_unit: int
    scaled: np.ndarray
    dscaled: np.ndarray
    log_base: np.ndarray
    accuracy: float

    @property
    def grid_step(self) -> float:
        return 1.0 / self.steps_per_unit

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """All grid abscissae and ``log rho`` there, as flat arrays."""
        n = self.steps_per_unit
        k = np.arange(self.scaled.shape[0])[:, None]
        u = (k + np.arange(n + 1)[None, :] / n)[:, :-1].ravel()
        with np.errstate(divide="ignore"):
            lr = (self.log_base[:, None] + np.log(self.scaled))[:, :-1].ravel()
        return u, lr


def _step_interval(prev2: np.ndarray, prev: np.ndarray, k: int, n: int) -> np.ndarray:
    """Samples of ``rho(k + j/n) / rho(k)`` from the two preceding intervals.

    ``prev`` and ``prev2`` are the samples on ``[k-1, k]`` and ``[k-2, k-1]``
    already rescaled to units of ``rho(k)``.  Each node solves

        u rho(u) = int_{u-1}^u rho(t) dt

    with the trapezoid rule plus the ``h^2/12`` Euler-Maclaurin end correction,
    whose derivatives come from ``rho'(t) = -rho(t-1)/t``.
    """
    h = 1.0 / n
    j = np.arange(1, n + 1)
    u = k + h * j
    # right-endpoint derivative rho'(u) and left-endpoint rho'(u - 1)
    d_right = -prev[1:] / u
    t = u - 1.0
    if k == 1:
        d_left = np.zeros(n)
        d_left[-1] = -1.0
        jump = np.where(j < n, 1.0, 0.0)
    else:
        d_left = -prev2[1:] / t
        jump = 0.0
    corr = -h * h / 12.0 * (d_right - d_left + jump)
    # previous-interval part of the trapezoid sum: prev[j]/2 + prev[j+1..n]
    tail = np.cumsum(prev[::-1])[::-1]
    tail_after = np.append(tail[2:], 0.0)
    denom = u - 0.5 * h
    a = (h * (0.5 * prev[1:] + tail_after) + corr) / denom
    m = 1.0 + h / denom
    # cur[j] = a[j] + (m[j] - 1) * C[j-1] with C the running sum of cur[1..j-1];
    # C[j] = a[j] + m[j] C[j-1] solved in closed form via cumulative products
    pm = np.cumprod(m)
    c = pm * np.cumsum(a / pm)
    cur = np.empty(n + 1)
    cur[0] = 1.0
    c_prev = np.concatenate(([0.0], c[:-1]))
    cur[1:] = a + (m - 1.0) * c_prev
    return cur


def _tabulate(u_max: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    n_int = max(2, math.ceil(u_max))
    scaled = np.empty((n_int, n + 1))
    log_base = np.empty(n_int)
    scaled[0] = 1.0
    log_base[0] = 0.0
    ones = np.ones(n + 1)
    for k in range(1, n_int):
        log_base[k] = log_base[k - 1] + math.log(scaled[k - 1, -1])
        prev = scaled[k - 1] * math.exp(log_base[k - 1] - log_base[k])
        prev2 = ones if k == 1 else scaled[k - 2] * math.exp(log_base[k - 2] - log_base[k])
        scaled[k] = _step_interval(prev2, prev, k, n)
    return scaled, log_base


def _derivatives(scaled: np.ndarray, log_base: np.ndarray, n: int) -> np.ndarray:
    d = np.zeros_like(scaled)
    u = np.arange(n + 1) / n
    for k in range(1, scaled.shape[0]):
        ratio = math.exp(log_base[k - 1] - log_base[k])
        d[k] = -ratio * scaled[k - 1] / (k + u)
    return d


def build_rho_table(
    u_max: float = DEFAULT_U_MAX,
    target_accuracy: float = 1e-9,
    steps_per_unit: int = DEFAULT_STEPS_PER_UNIT,
) -> RhoTable:
    """Tabulate rho on ``[0, u_max]``.

    The table is rebuilt at half the step and the two compared on shared
    nodes (in ``log rho``); if the discrepancy exceeds ``target_accuracy`` the
    step is halved again, up to 64 times finer than requested.
    """
    if u_max < 2:
        raise DomainError(f"u_max must be >= 2, got {u_max}")
    if target_accuracy < 1e-12:
        raise DomainError(f"target_accuracy below 1e-12 is not attainable: {target_accuracy}")
    n = steps_per_unit + steps_per_unit % 2
    scaled, log_base = _tabulate(u_max, n)
    while True:
        fine, fine_base = _tabulate(u_max, 2 * n)
        coarse_log = log_base[:, None] + np.log(scaled)
        fine_log = fine_base[:, None] + np.log(fine[:, ::2])
        err = float(np.max(np.abs(np.expm1(coarse_log - fine_log))))
        if err <= target_accuracy or n >= 64 * steps_per_unit:
            break
        n *= 2
        scaled, log_base = fine, fine_base
    scaled.setflags(write=False)
    dscaled = _derivatives(scaled, log_base, n)
    return RhoTable(float(u_max), n, scaled, dscaled, log_base, err)


@lru_cache(maxsize=4)
def default_rho_table(u_max: float = DEFAULT_U_MAX) -> RhoTable:
    return build_rho_table(u_max)


def log_rho(table: RhoTable, u):
    """``log rho(u)``; ``-inf`` for ``u < 0`` and ``u > u_max``."""
    u = np.asarray(u, dtype=float)
    out = np.full(u.shape, -np.inf)
    out[(u >= 0) & (u <= 1)] = 0.0
    mid = (u > 1) & (u <= table.u_max)
    if np.any(mid):
        out[mid] = _log_rho_interp(table, u[mid])
    return out if out.ndim else float(out)


def _log_rho_interp(table: RhoTable, u: np.ndarray) -> np.ndarray:
    n = table.steps_per_unit
    k = np.minimum(np.floor(u).astype(np.int64), table.scaled.shape[0] - 1)
    pos = (u - k) * n
    j = np.minimum(np.floor(pos).astype(np.int64), n - 1)
    t = pos - j
    h = 1.0 / n
    y0 = table.scaled[k, j]
    y1 = table.scaled[k, j + 1]
    d0 = table.dscaled[k, j] * h
    d1 = table.dscaled[k, j + 1] * h
    t2 = t * t
    t3 = t2 * t
    val = (
        (2 * t3 - 3 * t2 + 1) * y0
        + (t3 - 2 * t2 + t) * d0
        + (-2 * t3 + 3 * t2) * y1
        + (t3 - t2) * d1
    )
    return table.log_base[k] + np.log(val)


def rho(table: RhoTable, u):
    """Dickman's rho: 0 for ``u < 0``, 1 on ``[0, 1]``, tabulated up to ``u_max``, 0 beyond."""
    lr = log_rho(table, u)
    return np.exp(lr) if isinstance(lr, np.ndarray) else math.exp(lr)


def _breakpoints(lo: float, hi: float, arg_of_level) -> list[float]:
    """Split ``[lo, hi]`` wherever rho's argument crosses an integer."""
    pts = [lo]
    for w in arg_of_level:
        if lo < w < hi:
            pts.append(w)
    pts.append(hi)
    return sorted(pts)


def _piecewise(f, cuts: list[float], tol: float) -> tuple[float, int]:
    """Integrate ``f`` over consecutive ``cuts``, all pieces in one doubling loop.

    Each piece is mapped onto ``[0, 1]`` and must converge to ``tol`` on its own.
    """
    a = np.asarray(cuts[:-1], dtype=float)[:, None]
    width = np.diff(cuts)[:, None]
    res = simpson_doubling(lambda t: f(a + width * t) * width, 0.0, 1.0, rtol=tol)
    return float(np.sum(res.value)), res.panels


def sigma(table: RhoTable, u: float, v: float, tol: float = SIGMA_TOL) -> float:
    """Bach-Peralta ``sigma(u, v) = rho(u) + int_v^u rho(u - u/w) / w dw``.

    The integral is cut where ``u - u/w`` is an integer (rho's derivative
    jumps there) and each piece is integrated by Simpson with doubling.
    """
    return _sigma(table, u, v, tol)[0]


def _sigma(table, u, v, tol):
    if v > u:
        raise DomainError(f"sigma(u, v) needs v <= u, got u={u}, v={v}")
    if v < 1:
        raise DomainError(f"sigma(u, v) needs v >= 1, got v={v}")
    base = rho(table, u)
    if v == u:
        return base, 0
    cuts = _breakpoints(v, u, (u / (u - m) for m in range(1, math.ceil(u))))
    total, panels = _piecewise(lambda w: rho(table, u - u / w) / w, cuts, tol)
    return base + total, panels


def ekkelkamp_correction(table: RhoTable, u: float, v: float, tol: float = SIGMA_TOL) -> float:
    """``rho(u-1) + int_v^u rho(u - u/w - 1) / (w - 1) dw``.

    The integrand vanishes for ``w < u/(u-1)`` (negative rho argument), so
    integration starts there and ``w = 1`` is never touched.
    """
    return _ekkelkamp_bracket(table, u, v, tol)[0]


def _ekkelkamp_bracket(table, u, v, tol):
    if v > u:
        raise DomainError(f"need v <= u, got u={u}, v={v}")
    base = rho(table, u - 1)
    if u <= 1 or v == u:
        return base, 0
    start = max(v, u / (u - 1))
    if start >= u:
        return base, 0
    cuts = _breakpoints(start, u, (u / (u - 1 - m) for m in range(1, math.ceil(u - 1))))
    total, panels = _piecewise(lambda w: rho(table, u - u / w - 1) / (w - 1), cuts, tol)
    return base + total, panels


def _check_table_range(params: SmoothnessParams, table: RhoTable) -> None:
    if params.u > table.u_max:
        raise RangeError(f"u={params.u:.3f} exceeds rho table range {table.u_max}")


def bp_estimate(
    params: SmoothnessParams, table: RhoTable | None = None, tol: float = SIGMA_TOL
) -> EstimateResult:
    """Bach-Peralta estimate ``x * sigma(u, v)``."""
    table = table or default_rho_table()
    _check_table_range(params, table)
    t0 = time.perf_counter()
    s, panels = _sigma(table, params.u, params.v, tol)
    return EstimateResult(
        "sigma",
        params,
        params.x * s,
        time.perf_counter() - t0,
        {"panels": panels},
    )


def ekkelkamp_estimate(
    params: SmoothnessParams, table: RhoTable | None = None, tol: float = SIGMA_TOL
) -> EstimateResult:
    """``x sigma(u, v)`` plus Ekkelkamp's ``(1 - gamma) x / log x`` correction."""
    table = table or default_rho_table()
    _check_table_range(params, table)
    if params.x < 3:
        raise DomainError("ekkelkamp_estimate needs x >= 3")
    t0 = time.perf_counter()
    s, p1 = _sigma(table, params.u, params.v, tol)
    c, p2 = _ekkelkamp_bracket(table, params.u, params.v, tol)
    x = params.x
    value = x * s + (1.0 - EULER_GAMMA) * x / math.log(x) * c
    return EstimateResult(
        "ekkelkamp", params, value, time.perf_counter() - t0, {"panels": p1 + p2}
    )


def dump_rho_table(table: RhoTable, path: str | Path) -> None:
    """Write grid samples as ``u,rho`` rows (debugging aid)."""
    u, lr = table.nodes()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "rho"])
        for a, b in zip(u.tolist(), np.exp(lr).tolist()):
            w.writerow([repr(a), repr(b)])


def load_rho_samples(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    us, rs = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            us.append(float(row["u"]))
            rs.append(float(row["rho"]))
    return np.array(us), np.array(rs)
