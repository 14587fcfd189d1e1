"""Command-line interface: ``semismooth estimate|exact|table|bench``.

Integers accept ``2^k`` (and ``a^b`` generally).  Grids are ``lo:hi:*step``
(geometric), ``lo:hi:+step`` (arithmetic), a comma list, or a single value.

Exit codes: 0 success, 1 usage error, 2 numeric or domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exact as exact_mod
from .buchstab import (
    DEFAULT_TOL,
    RULES,
    crude_estimate,
    fixture_handle,
    integrate_estimate,
    make_handle,
    prime_sum_estimate,
    EstimatorHandle,
)
from .core import SemismoothError, SmoothnessParams
from .dickman import (
    DEFAULT_U_MAX,
    bp_estimate,
    build_rho_table,
    default_rho_table,
    ekkelkamp_estimate,
)
from .primes import SEGMENT_SIZE, cached_primes

METHODS = ("sigma", "ekkelkamp", "ht", "htf", "suzuki", "crude", "exact", "buchstab-sum")
BASES = ("exact", "sigma", "ekkelkamp", "ht", "htf", "suzuki")
BENCH_DEFAULT = ("suzuki", "sigma", "ekkelkamp", "htf", "ht")
FORMATS = ("csv", "tsv", "markdown")
RATIO_ZERO = 1e-6
# ExactPsiCounter keeps one int64 per integer; beyond this, count per call
COUNTER_LIMIT = 2**26


class UsageError(Exception):
    """Bad command-line input; exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- parsing -------------------------------------------------------------------

def parse_int(text: str) -> int:
    """``"2^40"``, ``"10^6"``, ``"1099511627776"`` or ``"1e6"`` as an integer."""
    t = text.strip().replace("**", "^")
    try:
        if "^" in t:
            base, exp = t.split("^", 1)
            return int(base) ** int(exp)
        if "e" in t.lower():
            v = float(t)
            if v != int(v):
                raise ValueError
            return int(v)
        return int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def parse_grid(text: str) -> list[int]:
    """``lo:hi:*step``, ``lo:hi:+step``, ``a,b,c`` or a single integer."""
    t = text.strip()
    if ":" in t:
        parts = t.split(":")
        if len(parts) != 3 or not parts[2] or parts[2][0] not in "*+":
            raise argparse.ArgumentTypeError(f"grid must be lo:hi:*step or lo:hi:+step: {text!r}")
        lo, hi, step = parse_int(parts[0]), parse_int(parts[1]), parse_int(parts[2][1:])
        geometric = parts[2][0] == "*"
        if lo < 1 or hi < lo or step < (2 if geometric else 1):
            raise argparse.ArgumentTypeError(f"empty or non-increasing grid: {text!r}")
        out, v = [], lo
        while v <= hi:
            out.append(v)
            v = v * step if geometric else v + step
        return out
    out = [parse_int(p) for p in t.split(",") if p.strip()]
    if not out or any(b <= a for a, b in zip(out, out[1:])):
        raise argparse.ArgumentTypeError(f"grid must be strictly ascending: {text!r}")
    return out


def read_config(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


# -- computation ---------------------------------------------------------------

@dataclass
class Settings:
    tol: float = DEFAULT_TOL
    quadrature: str = "fixed"
    rho_u_max: float = DEFAULT_U_MAX
    segment_size: int = SEGMENT_SIZE
    exact_ceiling: int = exact_mod.EXACT_CEILING
    allow_big_exact: bool = False
    base: str | None = None
    fixture: dict = field(default_factory=dict)

    def rho_table(self):
        if self.rho_u_max == DEFAULT_U_MAX:
            return default_rho_table()
        return build_rho_table(self.rho_u_max)


def refuse_big_exact(x: int, s: Settings) -> None:
    if x > s.exact_ceiling and not s.allow_big_exact:
        raise SemismoothError(
            f"refusing an exact count at x={x}: that sieves {x:.3g} integers, roughly "
            f"{x / 2**30:.0f} times the work at x=2^30 (CPU-days at x=2^40). "
            "Use a fixture via --ratio, or pass --allow-big-exact."
        )


def exact_base_handle(x: int, s: Settings) -> EstimatorHandle:
    """Exact ``Psi(t, y)`` for ``t <= x``: fixture, one-pass counter, or per call."""
    if any(k[0] == x for k in s.fixture):
        return fixture_handle(s.fixture)
    if x <= COUNTER_LIMIT:
        return make_handle("exact", limit=x)
    refuse_big_exact(x, s)

    def ev(t, y):
        return float(exact_mod.exact_psi(t, y, segment_size=s.segment_size, allow_big=True))

    return EstimatorHandle("exact", ev)


class CellEngine:
    """Computes ``method`` at ``(x, y, z)``; handles persist across cells."""

    def __init__(self, method: str, x: int, settings: Settings):
        if method not in METHODS:
            raise UsageError(f"unknown method {method!r}")
        self.method, self.x, self.s = method, x, settings
        self._handle: EstimatorHandle | None = None
        self._exact_table = None

    def handle(self) -> EstimatorHandle:
        if self._handle is None:
            m = self.method
            if m in ("crude", "buchstab-sum"):
                m = self.s.base or ("exact" if self.method == "buchstab-sum" else "ht")
            if m == "exact":
                self._handle = exact_base_handle(self.x, self.s)
            else:
                self._handle = make_handle(m, table=self.s.rho_table())
        return self._handle

    def prepare_exact(self, y_grid, z_grid) -> None:
        """Fill an exact grid in one sieve pass (or from the fixture)."""
        if self.method != "exact":
            return
        keys = [(self.x, y, z) for y in y_grid for z in z_grid if y <= z]
        if all(k in self.s.fixture for k in keys):
            return
        refuse_big_exact(self.x, self.s)
        self._exact_table = exact_mod.exact_psi_table(
            self.x, y_grid, z_grid, segment_size=self.s.segment_size, allow_big=True
        )

    def cell(self, y: int, z: int):
        x, m, s = self.x, self.method, self.s
        params = SmoothnessParams(x, y, z)
        if m == "exact":
            key = (x, y, z)
            if key in s.fixture:
                return s.fixture[key]
            if self._exact_table is None:
                self.prepare_exact([y], [z])
            return self._exact_table.cell(y, z)
        if m == "sigma":
            return bp_estimate(params, s.rho_table()).value
        if m == "ekkelkamp":
            return ekkelkamp_estimate(params, s.rho_table()).value
        if m == "crude":
            return crude_estimate(self.handle(), params).value
        if m == "buchstab-sum":
            return prime_sum_estimate(self.handle(), params, cached_primes(max(2, z))).value
        return integrate_estimate(self.handle(), params, tol=s.tol, rule=s.quadrature).value


def compute_grid(method, x, y_grid, z_grid, settings) -> list[list]:
    """Values on the grid, ``None`` where ``y > z``."""
    eng = CellEngine(method, x, settings)
    eng.prepare_exact(y_grid, z_grid)
    return [[eng.cell(y, z) if y <= z else None for z in z_grid] for y in y_grid]


# -- output --------------------------------------------------------------------

def format_ratio(v: float) -> str:
    return "0" if abs(v) < RATIO_ZERO else f"{v:.5g}"


def format_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.12g}"


def pow2_label(n: int) -> str:
    if n > 1 and n & (n - 1) == 0:
        return f"2^{n.bit_length() - 1}"
    return str(n)


def render(header: list[str], rows: list[list[str]], fmt: str, blank: str = "") -> str:
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines += ["| " + " | ".join(c if c != "" else blank for c in r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="," if fmt == "csv" else "\t", lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def render_grid(values, y_grid, z_grid, fmt, ratio_fixture=None, x=None) -> str:
    label = pow2_label if fmt == "markdown" else str
    header = ["y"] + [label(z) for z in z_grid]
    rows = []
    for y, row in zip(y_grid, values):
        cells = []
        for z, v in zip(z_grid, row):
            if v is None:
                cells.append("")
            elif ratio_fixture is not None:
                cells.append(format_ratio(float(v) / ratio_fixture[x, y, z]))
            else:
                cells.append(format_value(v))
        rows.append([label(y)] + cells)
    return render(header, rows, fmt, blank="---")


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands --------------------------------------------------------------------

def _settings(args) -> Settings:
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    s = Settings()
    known = {"tol", "quadrature", "rho_u_max", "segment_size", "exact_ceiling", "base"}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    try:
        if "tol" in cfg:
            s.tol = float(cfg["tol"])
        if "quadrature" in cfg:
            s.quadrature = cfg["quadrature"]
        if "rho_u_max" in cfg:
            s.rho_u_max = float(cfg["rho_u_max"])
        if "segment_size" in cfg:
            s.segment_size = parse_int(cfg["segment_size"])
        if "exact_ceiling" in cfg:
            s.exact_ceiling = parse_int(cfg["exact_ceiling"])
        if "base" in cfg:
            s.base = cfg["base"]
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"bad config value: {exc}") from None
    for name in ("tol", "quadrature", "base"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(s, name, v)
    if getattr(args, "segment_size", None) is not None:
        s.segment_size = args.segment_size
    s.allow_big_exact = getattr(args, "allow_big_exact", False)
    if s.tol <= 0:
        raise UsageError("--tol must be positive")
    if s.quadrature not in RULES:
        raise UsageError(f"quadrature must be one of {RULES}")
    if s.base is not None and s.base not in BASES:
        raise UsageError(f"--base must be one of {BASES}")
    ratio = getattr(args, "ratio", None)
    if ratio:
        s.fixture = exact_mod.load_fixture(ratio)
    return s


def _grids(args) -> tuple[list[int], list[int]]:
    y_grid = args.y_grid or ([args.y] if args.y else None)
    z_grid = args.z_grid or ([args.z] if args.z else None)
    if not y_grid:
        raise UsageError("give --y-grid (or --y)")
    return y_grid, z_grid or y_grid


def _check_ratio_cover(fixture, x, y_grid, z_grid) -> None:
    for y in y_grid:
        for z in z_grid:
            if y <= z and (x, y, z) not in fixture:
                raise SemismoothError(f"ratio fixture has no cell x={x}, y={y}, z={z}")


def cmd_estimate(args) -> int:
    s = _settings(args)
    z = args.z if args.z is not None else args.y
    eng = CellEngine(args.method, args.x, s)
    t0 = time.perf_counter()
    value = eng.cell(args.y, z)
    elapsed = time.perf_counter() - t0
    lines = [f"method: {args.method}", f"value: {format_value(value)}",
             f"elapsed_seconds: {elapsed:.6f}"]
    if s.fixture:
        _check_ratio_cover(s.fixture, args.x, [args.y], [z])
        lines.append(f"ratio: {format_ratio(float(value) / s.fixture[args.x, args.y, z])}")
    emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_exact(args) -> int:
    args.method = "exact"
    return cmd_table(args)


def cmd_table(args) -> int:
    s = _settings(args)
    y_grid, z_grid = _grids(args)
    if s.fixture:
        _check_ratio_cover(s.fixture, args.x, y_grid, z_grid)
    values = compute_grid(args.method, args.x, y_grid, z_grid, s)
    text = render_grid(values, y_grid, z_grid, args.format,
                       s.fixture if args.ratio else None, args.x)
    emit(text, args.out)
    return 0


def run_bench(methods, x, y_grid, z_grid, settings) -> list[tuple[str, float]]:
    """Total seconds per method over the grid, ascending.

    Shared precomputation (the rho table and the prime list up to the
    largest ``y``) is built before any timer starts.
    """
    settings.rho_table()
    cached_primes(max(2, max(max(y_grid), max(z_grid))))
    times = []
    for m in methods:
        t0 = time.perf_counter()
        compute_grid(m, x, y_grid, z_grid, settings)
        times.append((m, time.perf_counter() - t0))
    return sorted(times, key=lambda t: t[1])


def cmd_bench(args) -> int:
    s = _settings(args)
    y_grid, z_grid = _grids(args)
    methods = args.methods or list(BENCH_DEFAULT)
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}")
    rows = [[m, f"{t:.4f}"] for m, t in run_bench(methods, args.x, y_grid, z_grid, s)]
    emit(render(["method", "seconds"], rows, args.format), args.out)
    return 0


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="semismooth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid: bool):
        sp.add_argument("--x", type=parse_int, required=True)
        sp.add_argument("--y", type=parse_int)
        sp.add_argument("--z", type=parse_int)
        if grid:
            sp.add_argument("--y-grid", type=parse_grid)
            sp.add_argument("--z-grid", type=parse_grid)
        sp.add_argument("--tol", type=float, help=f"adaptive quadrature tolerance (default {DEFAULT_TOL})")
        sp.add_argument("--quadrature", choices=RULES,
                        help="Buchstab integral rule: 'fixed' (200 Simpson panels in t, the default, "
                             "matches the published tables) or 'adaptive' (doubling in log t to --tol)")
        sp.add_argument("--base", choices=BASES,
                        help="Psi(x, y) estimator inside crude / buchstab-sum")
        sp.add_argument("--ratio", metavar="FIXTURE", help="divide by counts from an x,y,z,count CSV")
        sp.add_argument("--format", choices=FORMATS, default="csv")
        sp.add_argument("--out", help="write here instead of stdout")
        sp.add_argument("--allow-big-exact", action="store_true",
                        help=f"permit exact counts above x={exact_mod.EXACT_CEILING}")
        sp.add_argument("--segment-size", type=parse_int)
        sp.add_argument("--config", help="key=value file: tol, quadrature, rho_u_max, "
                                          "segment_size, exact_ceiling, base")

    e = sub.add_parser("estimate", help="one estimate of Psi(x, y, z)")
    common(e, grid=False)
    e.add_argument("--method", choices=METHODS, required=True)
    e.set_defaults(func=cmd_estimate)

    x = sub.add_parser("exact", help="exact counts on a grid")
    common(x, grid=True)
    x.set_defaults(func=cmd_exact)

    t = sub.add_parser("table", help="a y-by-z grid of one method")
    common(t, grid=True)
    t.add_argument("--method", choices=METHODS, required=True)
    t.set_defaults(func=cmd_table)

    b = sub.add_parser("bench", help="total time per method over a grid")
    common(b, grid=True)
    b.add_argument("--methods", type=lambda v: v.split(","), help="comma list; default all five estimators")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "estimate" and args.y is None:
        parser.error("estimate needs --y")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except UsageError as exc:
        print(f"semismooth: {exc}", file=sys.stderr)
        return 1
    except (SemismoothError, ValueError, KeyError, OSError) as exc:
        print(f"semismooth: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
