"""Composite Simpson rule with panel doubling.

Every integral in the package goes through :func:`simpson_doubling`.  The
integrand is called with a 1-D array of abscissae and must return an array
of the same shape; previously computed ordinates are reused at each doubling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ArrayFunc = Callable[[np.ndarray], np.ndarray]


@dataclass
class QuadResult:
    value: float | np.ndarray
    panels: int
    converged: bool
    evaluations: int


def simpson_doubling(
    f: ArrayFunc,
    a: float,
    b: float,
    rtol: float = 1e-10,
    atol: float = 0.0,
    initial_panels: int = 8,
    max_panels: int = 2**16,
    min_panels: int = 0,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` by composite Simpson, doubling panels.

    Iteration stops once two successive estimates differ by at most
    ``max(rtol * |estimate|, atol)``.  Hitting ``max_panels`` returns the last
    estimate with ``converged=False`` instead of raising.

    Parameters
    ----------
    f : callable
        Vectorised integrand.  It may return shape ``(m, len(x))`` to
        integrate ``m`` functions on shared nodes; convergence then requires
        every component to settle.
    a, b : float
        Integration limits; ``a == b`` gives zero.
    rtol, atol : float
        Stopping tolerances on the change between doublings.
    initial_panels : int
        Panel count of the first estimate; must be even.
    max_panels : int
        Hard cap on the panel count.
    min_panels : int
        Do not declare convergence below this panel count.
    """
    if a == b:
        return QuadResult(0.0, 0, True, 0)
    n = max(2, initial_panels + (initial_panels % 2))
    x = np.linspace(a, b, n + 1)
    y = np.asarray(f(x), dtype=float)
    ends = y[..., 0] + y[..., -1]
    odd = y[..., 1:-1:2].sum(axis=-1)
    even = y[..., 2:-1:2].sum(axis=-1)
    h = (b - a) / n
    est = h / 3.0 * (ends + 4.0 * odd + 2.0 * even)
    evals = n + 1
    while True:
        if n >= max_panels:
            return QuadResult(_out(est), n, False, evals)
        n *= 2
        h = (b - a) / n
        even += odd
        mids = a + h * np.arange(1, n, 2)
        odd = np.asarray(f(mids), dtype=float).sum(axis=-1)
        evals += mids.size
        new = h / 3.0 * (ends + 4.0 * odd + 2.0 * even)
        if n >= min_panels and np.all(np.abs(new - est) <= np.maximum(rtol * np.abs(new), atol)):
            return QuadResult(_out(new), n, True, evals)
        est = new


def _out(v):
    return float(v) if np.ndim(v) == 0 else np.asarray(v)


def simpson_fixed(f: ArrayFunc, a: float, b: float, panels: int) -> QuadResult:
    """Composite Simpson with a fixed, even number of panels."""
    if panels < 2 or panels % 2:
        raise ValueError(f"panels must be even and >= 2, got {panels}")
    if a == b:
        return QuadResult(0.0, 0, True, 0)
    x = np.linspace(a, b, panels + 1)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / panels
    val = h / 3.0 * (
        y[..., 0] + y[..., -1] + 4.0 * y[..., 1:-1:2].sum(axis=-1) + 2.0 * y[..., 2:-1:2].sum(axis=-1)
    )
    return QuadResult(_out(val), panels, True, panels + 1)
