"""Lift a Psi(x, y) estimator to Psi(x, y, z) through the Buchstab identity.

Summing over the largest prime factor gives the exact identity

    Psi(x, y, z) = Psi(x, y) + sum_{y < p <= z} Psi(x/p, y),

and replacing the sum by ``int_y^z Psi(x/t, y) / log t dt`` gives an estimate
that costs a few dozen ``Psi`` evaluations instead of ``pi(z) - pi(y)``.  The
integral is taken in ``s = log t``:

    int_{log y}^{log z} Psi(x e^{-s}, y) e^s / s ds,

with panel doubling to a relative tolerance.  ``rule="fixed"`` instead applies
composite Simpson with 200 panels directly in ``t``.  That coarser rule is not
converged for large ``z/y`` (it overshoots by up to 15% at ``y = 2^6,
z = 2^20``), but it reproduces the long-standing published HT and Suzuki ratio
tables for ``x = 2^40`` cell for cell, so the table command uses it.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import DomainError, EstimateResult, RangeError, SmoothnessParams
from .dickman import EULER_GAMMA, RhoTable, default_rho_table, rho
from .exact import ExactPsiCounter
from .primes import PrimeList, cached_primes
from .quadrature import simpson_doubling, simpson_fixed
from .saddlepoint import SaddleEvaluator
from .suzuki import s_values

DEFAULT_TOL = 1e-6
INITIAL_PANELS = 8
MAX_PANELS = 2**16
FIXED_PANELS = 200
RULES = ("adaptive", "fixed")

TAGS = ("exact", "sigma", "ekkelkamp", "ht", "htf", "suzuki")


@dataclass
class EstimatorHandle:
    """A ``Psi(x, y)`` estimator: ``evaluate(x, y)`` with ``x`` scalar or array.

    Array inputs are evaluated in order, which saddle-point handles exploit to
    warm-start each root solve from the previous one.  ``thread_safe=False``
    marks handles that keep such per-call state.
    """

    tag: str
    evaluate: Callable
    thread_safe: bool = True
    info: dict = field(default_factory=dict)

    def __call__(self, x, y):
        return self.evaluate(x, y)


# -- handle factories -----------------------------------------------------------

def sigma_handle(table: RhoTable | None = None) -> EstimatorHandle:
    """``x rho(log x / log y)``; integrating it reproduces ``x sigma(u, v)``."""
    table = table or default_rho_table()

    def ev(x, y):
        x = np.asarray(x, dtype=float)
        out = x * rho(table, np.log(x) / math.log(y))
        return out if out.ndim else float(out)

    return EstimatorHandle("sigma", ev)


def ekkelkamp_handle(table: RhoTable | None = None) -> EstimatorHandle:
    """``x rho(u) + (1 - gamma) x rho(u - 1) / log x``."""
    table = table or default_rho_table()

    def ev(x, y):
        x = np.asarray(x, dtype=float)
        lx = np.log(x)
        u = lx / math.log(y)
        out = x * rho(table, u) + (1.0 - EULER_GAMMA) * x / lx * rho(table, u - 1.0)
        return out if out.ndim else float(out)

    return EstimatorHandle("ekkelkamp", ev)


def saddle_handle(
    primes: PrimeList | None = None,
    fast: bool = False,
    warm_start: bool = True,
    tail_density: str = "riemann",
) -> EstimatorHandle:
    """Algorithm HT (``fast=False``) or ``HT_f`` (``fast=True``).

    One :class:`SaddleEvaluator` is kept per ``y``.  With ``warm_start`` the
    nodes of each call are solved as one batch, started from the last
    ``alpha`` of the previous call; otherwise every node is solved cold.
    """
    evaluators: dict[float, SaddleEvaluator] = {}
    stats = {"newton_iterations": 0, "solves": 0}
    last_alpha: dict[float, float] = {}

    def get(y):
        ev = evaluators.get(y)
        if ev is None:
            prim = primes if primes is not None else cached_primes(max(2, math.floor(y)))
            ev = evaluators[y] = SaddleEvaluator(y, prim, fast=fast, tail_density=tail_density)
        return ev

    def ev(x, y):
        sev = get(float(y))
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if warm_start:
            out, alpha, rounds = sev.estimate_many(xs, last_alpha.get(sev.y))
            last_alpha[sev.y] = float(alpha[-1])
            stats["newton_iterations"] += rounds
        else:
            out = np.empty_like(xs)
            for i, xi in enumerate(xs.tolist()):
                out[i], sol = sev.estimate(xi)
                stats["newton_iterations"] += sol.iterations
        stats["solves"] += xs.size
        return out if np.ndim(x) else float(out[0])

    return EstimatorHandle("htf" if fast else "ht", ev, thread_safe=False, info=stats)


def suzuki_handle() -> EstimatorHandle:
    """``S(x, y)``, with ``Psi(x, y) = x`` taken for ``x <= y`` where ``S`` is undefined."""

    def ev(x, y):
        x = np.asarray(x, dtype=float)
        big = x > y
        if np.all(big):
            return s_values(x, y) if x.ndim else float(s_values(float(x), y))
        out = np.array(x, dtype=float, ndmin=1)
        if np.any(big):
            out[np.atleast_1d(big)] = s_values(out[np.atleast_1d(big)], y)
        return out if x.ndim else float(out[0])

    return EstimatorHandle("suzuki", ev)


def exact_handle(limit: int) -> EstimatorHandle:
    """Exact ``Psi(x, y)`` for ``x <= limit`` from one sieve pass."""
    counter = ExactPsiCounter(limit)
    return EstimatorHandle("exact", counter.psi, info={"limit": limit})


def fixture_handle(fixture: dict[tuple[int, int, int], int]) -> EstimatorHandle:
    """Exact ``Psi(x, y)`` looked up as the ``z = y`` cells of a fixture."""

    def ev(x, y):
        key = (int(x), int(y), int(y))
        if key not in fixture:
            raise RangeError(f"fixture has no Psi({key[0]}, {key[1]})")
        return float(fixture[key])

    return EstimatorHandle("exact", ev)


def make_handle(tag: str, **kwargs) -> EstimatorHandle:
    """Build the handle for one of :data:`TAGS`."""
    if tag == "sigma":
        return sigma_handle(kwargs.get("table"))
    if tag == "ekkelkamp":
        return ekkelkamp_handle(kwargs.get("table"))
    if tag in ("ht", "htf"):
        return saddle_handle(kwargs.get("primes"), fast=tag == "htf",
                             warm_start=kwargs.get("warm_start", True),
                             tail_density=kwargs.get("tail_density", "riemann"))
    if tag == "suzuki":
        return suzuki_handle()
    if tag == "exact":
        return exact_handle(kwargs["limit"])
    raise ValueError(f"unknown estimator {tag!r}; choose from {TAGS}")


# -- estimates ------------------------------------------------------------------

def _check_hypothesis(params: SmoothnessParams) -> None:
    if math.log(params.x / params.z) / math.log(params.y) < 1:
        warnings.warn(
            f"log(x/z)/log y < 1 at {params}; the integral form is outside its proven range",
            RuntimeWarning,
            stacklevel=3,
        )


def integrate_estimate(
    est: EstimatorHandle,
    params: SmoothnessParams,
    tol: float = DEFAULT_TOL,
    rule: str = "adaptive",
    panels: int = FIXED_PANELS,
) -> EstimateResult:
    """``est(x, y) + int_y^z est(x/t, y) / log t dt`` by Simpson's rule.

    ``rule="adaptive"`` doubles panels in ``s = log t`` until the relative
    change is at most ``tol``; ``rule="fixed"`` uses ``panels`` panels in
    ``t`` and ignores ``tol``.
    """
    if params.z < params.y:
        raise DomainError(f"need z >= y, got {params}")
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule!r}")
    _check_hypothesis(params)
    x, y = params.x, params.y
    t0 = time.perf_counter()
    base = float(est(x, y))
    if rule == "fixed":
        res = simpson_fixed(
            lambda t: est(x / t, y) / np.log(t), float(y), float(params.z), panels
        )
    else:
        lx = math.log(x)
        res = simpson_doubling(
            lambda s: est(np.exp(lx - s), y) * np.exp(s) / s,
            math.log(y),
            math.log(params.z),
            rtol=tol,
            initial_panels=INITIAL_PANELS,
            max_panels=MAX_PANELS,
        )
    diag = {
        "rule": rule,
        "panels": res.panels,
        "evaluations": res.evaluations + 1,
        "converged": res.converged,
    }
    return EstimateResult(est.tag, params, base + res.value, time.perf_counter() - t0, diag)


def prime_sum_estimate(
    est: EstimatorHandle, params: SmoothnessParams, primes: PrimeList | None = None
) -> EstimateResult:
    """``est(x, y) + sum_{y < p <= z} est(x/p, y)``; exact when ``est`` is."""
    x, y, z = params.x, params.y, params.z
    primes = primes if primes is not None else cached_primes(max(2, math.floor(z)))
    if primes.limit < math.floor(z):
        raise RangeError(f"need primes up to {z}, have {primes.limit}")
    t0 = time.perf_counter()
    ps = primes.upto(z)
    ps = ps[ps > y]
    base = est(x, y)
    if ps.size:
        vals = np.asarray(est(x / ps.astype(float), y))
        total = base + vals.sum()
    else:
        total = base
    if isinstance(total, np.integer):
        total = int(total)
    return EstimateResult(
        est.tag, params, total, time.perf_counter() - t0, {"terms": int(ps.size) + 1}
    )


def crude_estimate(est: EstimatorHandle, params: SmoothnessParams) -> EstimateResult:
    """``est(x, y) (1 + log(log z / log y))``, from ``Psi(x/p, y) ~ Psi(x, y)/p``."""
    t0 = time.perf_counter()
    factor = 1.0 + math.log(math.log(params.z) / math.log(params.y))
    value = float(est(params.x, params.y)) * factor
    return EstimateResult(
        f"crude[{est.tag}]", params, value, time.perf_counter() - t0, {"factor": factor}
    )
