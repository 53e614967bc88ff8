"""Command line interface: ``tacnode-rh {eval-kernel,eval-m,verify,convergence}``.

Every subcommand accepts ``--config PATH`` pointing to a JSON file whose keys
mirror the long flag names (``r1``, ``grid``, ``threads``, ...) plus an
optional ``quadrature`` object; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .airyop import QuadratureConfig, build_resolvent
from .errors import OnContourError, TacnodeError
from .kernels import (dg_kernel, dg_kernel_diag, dg_params, tacnode_kernel,
                      tacnode_kernel_diag)
from .tacnode import TacnodeParams, TacnodeSystem, derive_constants, sector_of
from .verify import SUITE, run_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_DEFAULTS = {"r1": 1.0, "r2": 1.0, "s1": 0.0, "s2": 0.0, "tau": 0.0, "s": 0.1,
             "kind": None, "grid": None, "format": None, "out": None, "threads": 1,
             "tol": None}
_QUAD_KEYS = {"panel_nodes": "panel_nodes", "panel_len": "panel_len",
              "domain_len": "tail_len", "tail_len": "tail_len", "ray_cap": "ray_cap"}
_M_KINDS = ("m0", "m1", "m2", "m3", "m4", "m5", "M")
_CONV_LEVELS = 5
_CONV_BASE = 3


class UsageError(Exception):
    """Bad configuration; mapped to exit code 2."""


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = str(text).split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must look like a:b:n, got {text!r}")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise UsageError(f"bad grid {text!r}: {exc}") from None
        if not (math.isfinite(a) and math.isfinite(b)) or n < 1:
            raise UsageError("grid ends must be finite and the count at least 1")
        return cls(a, b, n)

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    params: TacnodeParams
    quadrature: QuadratureConfig
    s: float = 0.1
    kind: str | None = None
    grid: GridSpec | None = None
    fmt: str | None = None
    out: str | None = None
    threads: int = 1
    tol: float | None = None


def _load_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return data


def build_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file and the command line flags."""
    merged = dict(_DEFAULTS)
    quad = {}
    if ns.config:
        data = _load_file(ns.config)
        nested = data.pop("params", {}) or {}
        quad = data.pop("quadrature", {}) or {}
        for key, value in {**nested, **data}.items():
            if key not in merged:
                raise UsageError(f"unknown config key {key!r}")
            merged[key] = value
    for key in _DEFAULTS:
        value = getattr(ns, key, None)
        if value is not None:
            merged[key] = value
    try:
        numbers = {k: float(merged[k]) for k in ("r1", "r2", "s1", "s2", "tau", "s")}
        threads = int(merged["threads"])
        tol = None if merged["tol"] is None else float(merged["tol"])
        qkw = {}
        for key, value in quad.items():
            if key not in _QUAD_KEYS:
                raise UsageError(f"unknown quadrature key {key!r}")
            qkw[_QUAD_KEYS[key]] = int(value) if key == "panel_nodes" else float(value)
        params = TacnodeParams(numbers["r1"], numbers["r2"], numbers["s1"], numbers["s2"],
                               numbers["tau"])
        quadrature = QuadratureConfig(**qkw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if not math.isfinite(numbers["s"]) or threads < 1:
        raise UsageError("s must be finite and threads at least 1")
    if tol is not None and not (tol >= 0 and math.isfinite(tol)):
        raise UsageError("tol must be finite and non-negative")
    grid = None if merged["grid"] is None else GridSpec.parse(merged["grid"])
    fmt = merged["format"]
    if fmt is not None and fmt not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    return RunConfig(params, quadrature, numbers["s"], merged["kind"], grid, fmt,
                     merged["out"], threads, tol)


# ----------------------------------------------------------------------------
# output

def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _json_float(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _table_text(columns, rows, fmt):
    if fmt == "json":
        body = [[_json_float(v) if isinstance(v, float) else v for v in row] for row in rows]
        return json.dumps({"columns": list(columns), "rows": body}, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt_float(v) if isinstance(v, float) else str(v) for v in row))
        buf.write("\n")
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from None


def _pmap(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# commands

def cmd_eval_kernel(cfg: RunConfig) -> int:
    kind = cfg.kind or "tacnode"
    if kind not in ("tacnode", "dg"):
        raise UsageError("--kind must be tacnode or dg for eval-kernel")
    grid = cfg.grid or GridSpec(-1.0, 1.0, 5)
    xs = grid.values()
    p = dg_params(cfg.s, cfg.params.tau) if kind == "dg" else cfg.params
    t = derive_constants(p).t
    try:
        # t depends on tau only through tau^2, so both sides share one resolvent
        res_plus = res_minus = build_resolvent(t, cfg.quadrature)
    except TacnodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    pairs = [(float(x), float(y)) for x in xs for y in xs]

    def one(xy):
        x, y = xy
        try:
            if kind == "dg":
                if x == y:
                    kv = dg_kernel_diag(x, cfg.s, p.tau, res_plus, res_minus)
                else:
                    kv = dg_kernel(x, y, cfg.s, p.tau, res_plus, res_minus)
            elif x == y:
                kv = tacnode_kernel_diag(x, p, res_plus, res_minus)
            else:
                kv = tacnode_kernel(x, y, p, res_plus, res_minus)
            return (x, y, kv.value.real, kv.value.imag, kv.form)
        except (TacnodeError, ArithmeticError, np.linalg.LinAlgError) as exc:
            print(f"warning: ({x}, {y}): {exc}", file=sys.stderr)
            return (x, y, math.nan, math.nan, "error")

    rows = _pmap(one, pairs, cfg.threads)
    _emit(_table_text(("x", "y", "re", "im", "form"), rows, cfg.fmt or "csv"), cfg.out)
    return EXIT_FAIL if any(r[4] == "error" for r in rows) else EXIT_OK


def _m_columns(kind):
    if kind == "M":
        names = [f"M{i}{j}" for i in range(1, 5) for j in range(1, 5)]
    else:
        names = [f"m{i}" for i in range(1, 5)]
    cols = ["re_z", "im_z", "sector"]
    for n in names:
        cols += [f"{n}_re", f"{n}_im"]
    return cols


def cmd_eval_m(cfg: RunConfig) -> int:
    kind = cfg.kind or "M"
    if kind not in _M_KINDS:
        raise UsageError(f"--kind must be one of {', '.join(_M_KINDS)} for eval-m")
    grid = cfg.grid or GridSpec(-2.0, 2.0, 5)
    vals = grid.values()
    points = [complex(a, b) for b in vals for a in vals]
    try:
        system = TacnodeSystem(cfg.params, config=cfg.quadrature)
    except TacnodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    width = 16 if kind == "M" else 4

    def one(z):
        try:
            sector = sector_of(z)
        except OnContourError:
            return (z.real, z.imag, -1) + (math.nan,) * (2 * width)
        try:
            if kind == "M":
                entries = np.asarray(system.M(z)).ravel()
            else:
                entries = np.asarray(system.m(int(kind[1]), z)).ravel()
        except (TacnodeError, ArithmeticError, np.linalg.LinAlgError) as exc:
            print(f"warning: z={z}: {exc}", file=sys.stderr)
            return (z.real, z.imag, -2) + (math.nan,) * (2 * width)
        flat = []
        for e in entries:
            flat += [float(e.real), float(e.imag)]
        return (z.real, z.imag, sector, *flat)

    rows = _pmap(one, points, cfg.threads)
    _emit(_table_text(_m_columns(kind), rows, cfg.fmt or "csv"), cfg.out)
    return EXIT_FAIL if any(r[2] == -2 for r in rows) else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    names = SUITE if cfg.kind is None else tuple(cfg.kind.split(","))
    unknown = [n for n in names if n not in SUITE + ("s_integral",)]
    if unknown:
        raise UsageError(f"unknown checks: {', '.join(unknown)}")

    def one(name):
        return run_check(name, cfg.params, s_dg=cfg.s, config=cfg.quadrature, tol=cfg.tol)

    reports = _pmap(one, names, cfg.threads)
    passed = all(r.passed for r in reports)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.check_name}: max residual {r.max_residual:.3e} "
              f"(tolerance {r.tolerance:.1e})", file=sys.stderr)
    if (cfg.fmt or "json") == "json":
        text = json.dumps({"passed": passed, "reports": [r.to_dict() for r in reports]},
                          indent=1) + "\n"
    else:
        rows = [(r.check_name, r.max_residual, r.tolerance, int(r.passed)) for r in reports]
        text = _table_text(("check_name", "max_residual", "tolerance", "passed"), rows, "csv")
    _emit(text, cfg.out)
    return EXIT_OK if passed else EXIT_FAIL


def _convergence_targets(p: TacnodeParams, config: QuadratureConfig):
    """The quantities tracked by ``convergence``: q, p, u at t and m, K samples."""
    system = TacnodeSystem(p, config=config)
    b = system.pq
    z = np.array([0.7 + 0.4j, -0.5 + 0.9j, -0.6 - 0.5j])
    vals = [b.q, b.p, b.u]
    for j in range(6):
        vals.extend(np.asarray(system.m(j, z)).ravel())
    vals.append(tacnode_kernel(0.3, -0.2, p, system.res, system.res).value)
    return np.array(vals, dtype=complex)


def cmd_convergence(cfg: RunConfig) -> int:
    q0 = cfg.quadrature
    levels = [_CONV_BASE * 2**k for k in range(_CONV_LEVELS)]
    if q0.panel_nodes not in levels:
        levels += [q0.panel_nodes, 2 * q0.panel_nodes]
    tol = 1e-9 if cfg.tol is None else cfg.tol
    values = []
    for n in levels:
        qc = QuadratureConfig(n, q0.panel_len, q0.tail_len, q0.ray_cap, tol=1.0,
                              max_refinements=0)
        try:
            values.append(_convergence_targets(cfg.params, qc))
        except TacnodeError as exc:
            print(f"warning: panel_nodes={n}: {exc}", file=sys.stderr)
            values.append(None)
    by_n = dict(zip(levels, values))
    diffs = {}
    for n in levels:
        a, b = by_n[n], by_n.get(2 * n)
        if a is not None and b is not None:
            diffs[n] = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
    chain = [diffs[n] for n in levels[:_CONV_LEVELS] if n in diffs]
    klass = classify_convergence(chain)
    print(f"convergence class: {klass}", file=sys.stderr)
    rows = []
    for n, d in diffs.items():
        nxt = diffs.get(2 * n)
        order = math.log2(d / nxt) if nxt and d > 0 else math.nan
        rows.append((n, 2 * n, d, order, klass))
    text = _table_text(("panel_nodes", "doubled", "max_rel_change", "observed_order", "class"),
                       rows, cfg.fmt or "csv")
    _emit(text, cfg.out)
    if not diffs:
        return EXIT_FAIL
    check = diffs.get(q0.panel_nodes, chain[-1] if chain else math.inf)
    return EXIT_OK if check <= tol and klass == "spectral" else EXIT_FAIL


def classify_convergence(diffs, floor: float = 1e-12, min_gain: float = 6.0) -> str:
    """'spectral' or 'algebraic' from the changes under successive node doublings.

    With n Gauss-Legendre nodes per panel the error behaves like rho^(-2n), so
    a doubling gains an ever larger number of bits: the observed orders grow,
    or the rounding floor is hit after doublings that each gained more than
    ``min_gain`` bits. A fixed algebraic order shows constant orders instead.
    """
    if len(diffs) < 2:
        return "undetermined"
    above = [d for d in diffs if d > floor]
    orders = [math.log2(a / b) for a, b in zip(diffs, diffs[1:]) if a > floor and b > 0]
    if len(above) < len(diffs) and all(o > min_gain for o in orders):
        return "spectral"
    if len(orders) >= 2 and all(o2 > o1 for o1, o2 in zip(orders, orders[1:])):
        return "spectral"
    return "algebraic"


_COMMANDS = {"eval-kernel": cmd_eval_kernel, "eval-m": cmd_eval_m, "verify": cmd_verify,
             "convergence": cmd_convergence}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for name in ("r1", "r2", "s1", "s2", "tau", "s"):
        common.add_argument(f"--{name}", type=float)
    common.add_argument("--kind", help="tacnode|dg, m0..m5|M, or a comma list of checks")
    common.add_argument("--grid", help="a:b:n")
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--threads", type=int)
    common.add_argument("--tol", type=float)
    parser = _Parser(prog="tacnode-rh", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("eval-kernel", parents=[common], help="tacnode or DG kernel on an x,y grid")
    sub.add_parser("eval-m", parents=[common], help="m(j) or M on a square complex grid")
    sub.add_parser("verify", parents=[common], help="run the verification suite")
    sub.add_parser("convergence", parents=[common], help="self-convergence under node doubling")
    return parser


def _glue_values(argv):
    # argparse reads "--grid -1:1:9" as two options; glue such values to their flag
    out, it = [], iter(argv)
    for arg in it:
        if arg in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and nxt not in _VALUE_FLAGS \
                    and nxt not in ("-h", "--help"):
                out.append(f"{arg}={nxt}")
                continue
            out.append(arg)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(arg)
    return out


_VALUE_FLAGS = ("--r1", "--r2", "--s1", "--s2", "--tau", "--s", "--grid", "--tol")


def main(argv=None) -> int:
    parser = make_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        ns = parser.parse_args(_glue_values(argv))
        cfg = build_config(ns)
        return _COMMANDS[ns.command](cfg)
    except UsageError as exc:
        print(f"tacnode-rh: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
