"""Acceptance criteria 1-11, one test each, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
import time
import warnings

import numpy as np
import pytest

import frozen_values as fv
import published_ratios as pub
from semismooth.buchstab import integrate_estimate, make_handle, prime_sum_estimate
from semismooth.cli import Settings, run_bench
from semismooth.core import SmoothnessParams
from semismooth.dickman import bp_estimate, default_rho_table, ekkelkamp_estimate, rho
from semismooth.exact import exact_psi_table, load_fixture
from semismooth.saddlepoint import SaddleEvaluator, phi2_numdiff
from semismooth.suzuki import _xi_newton, solve_xi

X = 2**40
FIXTURE = load_fixture()
CELLS = sorted(pub.SIGMA)


@pytest.fixture
def report(capsys):
    def _report(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return _report


def ratio_table(compute) -> tuple[dict, float]:
    t0 = time.perf_counter()
    out = {}
    for ky, kz in CELLS:
        y, z = 2**ky, 2**kz
        out[ky, kz] = compute(SmoothnessParams(X, y, z)) / FIXTURE[X, y, z]
    return out, time.perf_counter() - t0


def worst(got: dict, table: dict, keys) -> tuple[float, tuple]:
    errs = {k: abs(got[k] - float(table[k])) for k in keys}
    k = max(errs, key=errs.get)
    return errs[k], k


def integrated(tag: str):
    h = make_handle(tag)
    return lambda p: integrate_estimate(h, p, rule="fixed").value


def test_01_exact_oracle(report):
    t0 = time.perf_counter()
    tab = exact_psi_table(2**24, fv.GRID_24, fv.GRID_24)
    dt = time.perf_counter() - t0
    bad = [
        (y, z)
        for i, y in enumerate(fv.GRID_24)
        for j, z in enumerate(fv.GRID_24)
        if y <= z and tab.counts[i, j] != fv.TABLE_2_24[i][j]
    ]
    report(1, not bad and dt < 60, f"x=2^24 grid vs trial division: {len(bad)} mismatches, {dt:.1f} s")


def test_02_bach_peralta(report):
    default_rho_table()
    got, dt = ratio_table(lambda p: bp_estimate(p).value)
    err, k = worst(got, pub.SIGMA, CELLS)
    report(2, err <= 0.002 and dt < 2, f"Table 2 worst |diff| {err:.2e} at {k}, {dt:.2f} s")


def test_03_ekkelkamp(report):
    default_rho_table()
    got, dt = ratio_table(lambda p: ekkelkamp_estimate(p).value)
    err, k = worst(got, pub.EKKELKAMP, CELLS)
    report(3, err <= 0.002 and dt < 3, f"Table 3 worst |diff| {err:.2e} at {k}, {dt:.2f} s")


def test_04_ht(report):
    got, dt = ratio_table(integrated("ht"))
    err, k = worst(got, pub.HT, CELLS)
    report(4, err <= 0.005 and dt < 120, f"Table 4 worst |diff| {err:.2e} at {k}, {dt:.2f} s")


def test_05_htf(report):
    ht, _ = ratio_table(integrated("ht"))
    htf, _ = ratio_table(integrated("htf"))
    low = [k for k in CELLS if k[0] <= 8]
    high = [k for k in CELLS if k[0] >= 10]
    same = max(abs(htf[k] / ht[k] - 1) for k in low)
    err, k = worst(htf, pub.HTF, high)
    report(
        5,
        same <= 1e-6 and err <= 0.02,
        f"y<=2^8 max rel diff from HT {same:.1e}; y>=2^10 worst |diff| {err:.4f} at {k}",
    )


def test_06_suzuki(report):
    got, dt = ratio_table(integrated("suzuki"))
    zeros = [k for k in CELLS if float(pub.SUZUKI[k]) == 0]
    checked = [k for k in CELLS if float(pub.SUZUKI[k]) != 0 and k[0] >= 6]
    err, k = worst(got, pub.SUZUKI, checked)
    zmax = max(abs(got[k]) for k in zeros)
    report(
        6,
        err <= 0.005 and zmax < 1e-6 and dt < 1,
        f"Table 6 worst |diff| {err:.2e} at {k}; printed zeros max {zmax:.1e}; {dt:.3f} s",
    )


def test_07_phi2(report):
    s, y = 0.03619120682, 1e3
    direct = SaddleEvaluator(y).sums(s)[2]
    nd = phi2_numdiff(s, y, 1e-7)
    ref = 127790.77386041727
    sig12 = abs(direct - ref) <= 0.5 * 10 ** (math.floor(math.log10(ref)) - 11)
    sig11 = abs(nd - direct) <= 0.5 * 10 ** (math.floor(math.log10(direct)) - 10)
    report(7, sig12 and sig11, f"direct {direct!r}, numdiff {nd!r}")


def test_08_rho(report):
    t = default_rho_table()
    errs = {2.0: abs(rho(t, 2.0) / (1 - math.log(2)) - 1)}
    refs = {2.5: fv.RHO_ODE[2.5], 3.0: fv.RHO_ODE[3.0], 5.0: fv.RHO_SERIES[5.0], 10.0: fv.RHO_SERIES[10.0]}
    for u, r in refs.items():
        errs[u] = abs(rho(t, u) / r - 1)
    u = max(errs, key=errs.get)
    report(8, errs[u] <= 1e-7, f"worst relative error {errs[u]:.1e} at u={u}")


def test_09_root_finders(report):
    failures = []
    for x in np.geomspace(1e3, 2.0**60, 10):
        for y in (2.0, 30.0, 1e3, 2.0**16, 2.0**20):
            if y > x:
                y = x
            ev = SaddleEvaluator(y)
            sol = ev.solve_alpha(float(x))
            lx = math.log(x)
            res = abs(ev.sums(sol.alpha)[1] + lx)
            if not (1 / (2 * lx) <= sol.alpha <= 2 and res <= 1e-9 * lx):
                failures.append(("alpha", x, y, sol.alpha, res))
    for u in fv.XI:
        sol = solve_xi(u)
        if not (1 - 1 / u <= sol.xi <= 2 * (u - 1)):
            failures.append(("xi bounds", u, sol.xi))
        if abs(math.expm1(sol.xi) - u * sol.xi) > 1e-12 * (1 + u * sol.xi):
            failures.append(("xi residual", u, sol.residual))
    its = max(_xi_newton(u)[1] for u in np.geomspace(2, 1000, 200))
    if its > 8:
        failures.append(("xi newton iterations", its))
    report(9, not failures, f"50 alpha points, 8 xi points, max Newton iterations {its}; failures {failures}")


def test_10_buchstab_consistency(report):
    rel = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for y, z in ((2**8, 2**12), (2**10, 2**14)):
            p = SmoothnessParams(2**30, y, z)
            a = integrate_estimate(make_handle("ht"), p, tol=1e-6).value
            b = prime_sum_estimate(make_handle("ht"), p).value
            rel[y, z] = abs(a / b - 1)
    exact_ok = True
    for x, table in ((10**4, fv.TABLE_10_4), (10**6, fv.TABLE_10_6)):
        h = make_handle("exact", limit=x)
        for i, y in enumerate(fv.GRID_SMALL):
            for j, z in enumerate(fv.GRID_SMALL):
                if y <= z:
                    got = prime_sum_estimate(h, SmoothnessParams(x, y, z)).value
                    exact_ok &= got == table[i][j]
    ok = exact_ok and max(rel.values()) <= 1e-3
    detail = ", ".join(f"{k}: {v:.1e}" for k, v in rel.items())
    report(10, ok, f"integral vs prime sum rel diff {detail}; exact prime sum reproduces tables: {exact_ok}")


def test_11_timing(report):
    grid_y = [2**k for k in range(2, 21, 2)]
    grid_z = [2**k for k in range(10, 21, 2)]
    times = dict(run_bench(["suzuki", "sigma", "ekkelkamp", "htf", "ht"], X, grid_y, grid_z, Settings()))
    order = sorted(times, key=times.get)
    ratio = times["ht"] / times["htf"]
    ok = order == ["suzuki", "sigma", "ekkelkamp", "htf", "ht"] and ratio > 3
    detail = ", ".join(f"{m} {times[m]:.3f} s" for m in order)
    report(11, ok, f"{detail}; HT/HT_f = {ratio:.1f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
