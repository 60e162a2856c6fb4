"""Command-line front end.

Subcommands: spectrum, roots, wavefunction, verify, sweep.  Every flag can
also be given in a flat ``key = value`` config file (``--config``) whose
keys are the long flag names without the leading dashes; flags on the
command line override the file.

Exit codes: 0 success, 1 internal error, 2 invalid input, 3 no positive
root, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, heun, oracle, quantize
from .errors import InvalidParameters, NoMatchingEigenvalue, NoPositiveRoot, QESError
from .model import PhysicalParams, delta_from_omega, resolve_omega

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INVALID = 2
EXIT_NO_ROOT = 3
EXIT_VERIFY_FAILED = 4

MAX_N = 12
MAX_L = 20

MODE_COLUMNS = ["n", "l", "root_index", "branch", "xi_star", "delta", "omega", "energy"]

DEFAULTS = {
    "m": 1.0,
    "M_quad": 1.0,
    "Omega": 0.0,
    "theta": 1.0,
    "format": "csv",
    "jobs": 1,
    "no_meta": False,
    "seedless": False,
    "n": "1",
    "l": "0",
    "nr": "0",
    "landau_limit": False,
    "dump_poly": False,
    "strict": False,
    "root_index": 0,
    "samples": 2001,
    "n_points": oracle.DEFAULT_POINTS,
    "tol": oracle.DEFAULT_TOLERANCE,
    "oscillator": False,
    "no_convergence_check": False,
    "keep_going": False,
}


class UsageError(Exception):
    """Invalid command-line input (exit code 2)."""


@dataclass
class RunConfig:
    params: PhysicalParams
    n_range: list[int]
    l_range: list[int]
    grid: dict = field(default_factory=dict)
    output_format: str = "csv"
    output_path: str | None = None
    omega: float | None = None
    options: dict = field(default_factory=dict)


@dataclass
class Table:
    columns: list[str]
    rows: list[dict]
    meta: dict
    exit_code: int = EXIT_OK


# -- parsing helpers ----------------------------------------------------------


def parse_range(text: str) -> list[int]:
    """'3', '1..3', '-2..2' or comma lists of those."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            try:
                a, b = int(lo), int(hi)
            except ValueError as exc:
                raise UsageError(f"bad range {part!r}") from exc
            out.extend(range(a, b + 1))
        else:
            try:
                out.append(int(part))
            except ValueError as exc:
                raise UsageError(f"bad integer {part!r}") from exc
    if not out:
        raise UsageError(f"empty range {text!r}")
    return out


def parse_float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc
    if not vals:
        raise UsageError(f"empty list {text!r}")
    return vals


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"bad boolean {text!r}")


def read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-")] = value
    return values


def fmt_csv(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        return ";".join(fmt_csv(v) for v in value)
    return str(value)


def render(table: Table, fmt: str, with_meta: bool = True) -> str:
    meta = table.meta if with_meta else {}
    if fmt == "json":
        return json.dumps({"meta": meta, "rows": table.rows}, indent=2) + "\n"
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {json.dumps(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([fmt_csv(row.get(c)) for c in table.columns])
    return buf.getvalue()


def load_json_table(path: str) -> Table:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict) or "rows" not in doc:
        raise UsageError(f"{path}: expected an object with 'meta' and 'rows'")
    rows = doc["rows"]
    columns = list(rows[0].keys()) if rows else []
    return Table(columns=columns, rows=rows, meta=doc.get("meta", {}))


# -- commands -------------------------------------------------------------------


def _params_meta(cfg: RunConfig) -> dict:
    p = cfg.params
    return {
        "m": p.m,
        "M_quad": p.M_quad,
        "lambda": p.lambda_,
        "Omega": p.Omega,
        "theta": p.theta_pot,
        "omega": cfg.omega,
    }


def _mode_row(mode: quantize.QuantizedMode) -> dict:
    return {c: getattr(mode, c) for c in MODE_COLUMNS}


def _check_ranges(cfg: RunConfig, check_n: bool = True):
    if check_n and not all(1 <= n <= MAX_N for n in cfg.n_range):
        raise UsageError(f"n must lie in [1, {MAX_N}], got {cfg.n_range}")
    if not all(abs(l) <= MAX_L for l in cfg.l_range):
        raise UsageError(f"|l| must be <= {MAX_L}, got {cfg.l_range}")


def cmd_spectrum(cfg: RunConfig) -> Table:
    p = cfg.params
    meta = {"command": "spectrum", "version": __version__, **_params_meta(cfg)}
    if cfg.options.get("landau_limit"):
        _check_ranges(cfg, check_n=False)
        if p.theta_pot != 0:
            raise UsageError("--landau-limit requires --theta 0")
        if cfg.omega is None and p.lambda_ is None:
            raise UsageError("--landau-limit needs --omega or --lambda")
        omega = resolve_omega(p, cfg.omega)
        nrs = parse_range(cfg.options.get("nr", "0"))
        if any(v < 0 for v in nrs):
            raise UsageError("--nr must be >= 0")
        delta = delta_from_omega(p, omega)
        rows = []
        for nr in nrs:
            for l in cfg.l_range:
                rows.append(
                    {
                        "n_r": nr,
                        "l": l,
                        "omega": omega,
                        "delta": delta,
                        "energy": quantize.landau_limit(p, nr, l, omega),
                    }
                )
        return Table(["n_r", "l", "omega", "delta", "energy"], rows, meta)

    _check_ranges(cfg)
    if p.theta_pot == 0:
        raise UsageError("theta = 0 leaves omega unconstrained; use --landau-limit with --omega")
    if cfg.omega is not None:
        warnings.warn("--omega is ignored: the quantization condition fixes omega", stacklevel=2)
    rows = []
    for n in cfg.n_range:
        for l in cfg.l_range:
            rows.extend(_mode_row(m) for m in quantize.solve_level(p, n, l))
    return Table(list(MODE_COLUMNS), rows, meta)


def cmd_roots(cfg: RunConfig) -> Table:
    _check_ranges(cfg)
    dump = cfg.options.get("dump_poly", False)
    columns = ["n", "l_abs", "degree", "roots"] + (["poly_coeffs"] if dump else [])
    rows = []
    missing = False
    seen = set()
    for n in cfg.n_range:
        for l in cfg.l_range:
            key = (n, abs(l))
            if key in seen:
                continue
            seen.add(key)
            poly = quantize.constraint_polynomial(n, abs(l))
            try:
                roots = quantize.solve_xi(n, abs(l))
            except NoPositiveRoot:
                roots = []
                missing = True
            row = {"n": n, "l_abs": abs(l), "degree": poly.degree, "roots": roots}
            if dump:
                row["poly_coeffs"] = [str(c) for c in poly.poly_coeffs]
            rows.append(row)
    code = EXIT_NO_ROOT if (missing and cfg.options.get("strict")) else EXIT_OK
    return Table(columns, rows, {"command": "roots", "version": __version__}, exit_code=code)


def cmd_wavefunction(cfg: RunConfig) -> Table:
    _check_ranges(cfg)
    if len(cfg.n_range) != 1 or len(cfg.l_range) != 1:
        raise UsageError("wavefunction takes a single --n and --l")
    n, l = cfg.n_range[0], cfg.l_range[0]
    p = cfg.params
    if p.theta_pot == 0:
        raise UsageError("wavefunction requires theta != 0")
    modes = [m for m in quantize.solve_level(p, n, l) if m.branch == "+"]
    idx = int(cfg.options.get("root_index", 0))
    if not 0 <= idx < len(modes):
        raise UsageError(f"--root-index must be in [0, {len(modes) - 1}]")
    mode = modes[idx]
    samples = int(cfg.options.get("samples", DEFAULTS["samples"]))
    if samples < 4:
        raise UsageError("--samples must be >= 4")
    r_max = cfg.grid.get("r_max") or max(10.0, math.sqrt(mode.Lambda) + 6.0)
    series = heun.coefficients(mode.l_abs, mode.xi_star, mode.Lambda, n)
    grid = np.linspace(0.0, r_max, samples)
    raw = heun.sample_radial(series, grid)
    normed = heun.normalize(raw)
    rows = [
        {"r": float(r), "F": float(f), "F_normalized": float(g)}
        for r, f, g in zip(grid, raw.values, normed.values)
    ]
    meta = {
        "command": "wavefunction",
        "version": __version__,
        **_params_meta(cfg),
        "n": n,
        "l": l,
        "root_index": idx,
        "xi_star": mode.xi_star,
        "Lambda": mode.Lambda,
        "coeffs": list(series.coeffs),
        "nodes": heun.node_count(raw),
    }
    return Table(["r", "F", "F_normalized"], rows, meta)


VERIFY_COLUMNS = [
    "n",
    "l",
    "root_index",
    "branch",
    "xi_star",
    "Lambda_analytic",
    "Lambda_numeric",
    "eigenindex",
    "node_count",
    "abs_error",
    "richardson_error_estimate",
    "convergence_ratio",
    "tolerance",
    "r_max",
    "n_points",
    "passed",
]


def _grid_for(cfg: RunConfig, Lam: float) -> oracle.GridSpec:
    n_points = int(cfg.grid.get("n_points") or oracle.DEFAULT_POINTS)
    r_max = cfg.grid.get("r_max") or max(10.0, math.sqrt(Lam) + 6.0)
    return oracle.GridSpec(r_max=float(r_max), n_points=n_points)


def cmd_verify(cfg: RunConfig) -> Table:
    _check_ranges(cfg)
    tol = float(cfg.options.get("tol", oracle.DEFAULT_TOLERANCE))
    meta = {"command": "verify", "version": __version__, **_params_meta(cfg), "tolerance": tol}
    if cfg.options.get("oscillator"):
        rows = []
        for l in cfg.l_range:
            g = _grid_for(cfg, 10 + 2 * abs(l))
            numeric, exact = oracle.oscillator_levels(abs(l), 3, g)
            for k, (num, ex) in enumerate(zip(numeric, exact)):
                rel = abs(num - ex) / ex
                rows.append(
                    {
                        "l": l,
                        "k": k,
                        "Lambda_exact": ex,
                        "Lambda_numeric": num,
                        "rel_error": rel,
                        "passed": rel <= tol,
                    }
                )
        code = EXIT_OK if all(r["passed"] for r in rows) else EXIT_VERIFY_FAILED
        cols = ["l", "k", "Lambda_exact", "Lambda_numeric", "rel_error", "passed"]
        return Table(cols, rows, meta, exit_code=code)

    if cfg.params.theta_pot == 0:
        raise UsageError("verify requires theta != 0 (or --oscillator)")
    xi_override = cfg.options.get("xi_override")
    check = not cfg.options.get("no_convergence_check", False)
    rows = []
    cache: dict = {}
    ok = True
    for n in cfg.n_range:
        for l in cfg.l_range:
            for mode in quantize.solve_level(cfg.params, n, l):
                key = (mode.n, mode.l_abs, mode.root_index)
                if key not in cache:
                    g = _grid_for(cfg, mode.Lambda)
                    try:
                        cache[key] = oracle.verify_mode(
                            mode, g, xi=xi_override, tolerance=tol, convergence_check=check
                        )
                    except NoMatchingEigenvalue as exc:
                        cache[key] = exc.report
                rep = cache[key]
                ok = ok and rep.passed and rep.index_matches
                rows.append(
                    {
                        "n": mode.n,
                        "l": mode.l,
                        "root_index": mode.root_index,
                        "branch": mode.branch,
                        "xi_star": rep.xi_star,
                        "Lambda_analytic": rep.Lambda_analytic,
                        "Lambda_numeric": rep.Lambda_numeric,
                        "eigenindex": rep.eigenindex,
                        "node_count": rep.node_count,
                        "abs_error": rep.abs_error,
                        "richardson_error_estimate": rep.richardson_error_estimate,
                        "convergence_ratio": rep.convergence_ratio,
                        "tolerance": rep.tolerance,
                        "r_max": rep.r_max,
                        "n_points": rep.n_points,
                        "passed": rep.passed,
                    }
                )
    return Table(list(VERIFY_COLUMNS), rows, meta, exit_code=EXIT_OK if ok else EXIT_VERIFY_FAILED)


def _sweep_task(args):
    base, Om, th, n, l = args
    p = PhysicalParams(m=base.m, M_quad=base.M_quad, lambda_=base.lambda_, Omega=Om, theta_pot=th)
    if th == 0:
        raise UsageError("theta = 0 in sweep; the quantization condition needs theta != 0")
    return [{"Omega": Om, "theta": th, **_mode_row(m)} for m in quantize.solve_level(p, n, l)]


def cmd_sweep(cfg: RunConfig) -> Table:
    _check_ranges(cfg)
    p = cfg.params
    Om_list = cfg.options.get("Omega_list") or [p.Omega]
    th_list = cfg.options.get("theta_list") or [p.theta_pot]
    keep_going = cfg.options.get("keep_going", False)
    tasks = [(p, Om, th, n, l) for Om in Om_list for th in th_list for n in cfg.n_range for l in cfg.l_range]

    def run(task):
        try:
            return task, _sweep_task(task), None
        except (QESError, UsageError) as exc:
            return task, None, exc

    jobs = max(1, int(cfg.options.get("jobs", 1)))
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(run, tasks))

    columns = ["Omega", "theta"] + MODE_COLUMNS + (["error"] if keep_going else [])
    rows = []
    for (_, Om, th, n, l), out, exc in results:
        if exc is not None:
            if not keep_going:
                raise exc
            rows.append({"Omega": Om, "theta": th, "n": n, "l": l, "error": f"{type(exc).__name__}: {exc}"})
            continue
        for row in out:
            if keep_going:
                row["error"] = ""
            rows.append(row)
    meta = {
        "command": "sweep",
        "version": __version__,
        **_params_meta(cfg),
        "Omega_list": list(Om_list),
        "theta_list": list(th_list),
    }
    return Table(columns, rows, meta)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "roots": cmd_roots,
    "wavefunction": cmd_wavefunction,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


# -- argument parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("physical parameters")
    g.add_argument("--m", type=float, help="mass (default 1)")
    g.add_argument("--M-quad", dest="M_quad", type=float, help="magnetic quadrupole scalar M > 0 (default 1)")
    g.add_argument("--lambda", dest="lambda_", type=float, help="charge-density parameter")
    g.add_argument("--omega", type=float, help="cyclotron frequency; overrides 2 M lambda / m")
    g.add_argument("--Omega", type=float, help="rotation rate (default 0)")
    g.add_argument("--theta", type=float, help="scalar potential strength theta (default 1)")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=["csv", "json"])
    o.add_argument("--out", help="write to PATH instead of stdout")
    o.add_argument("--config", help="flat key = value file; flags override it")
    o.add_argument("--jobs", type=int, help="worker threads for sweeps")
    o.add_argument("--no-meta", dest="no_meta", action="store_true", default=None, help="omit metadata")
    o.add_argument("--from-json", dest="from_json", help="re-emit a previously written JSON table")
    o.add_argument(
        "--seedless", action="store_true", default=None, help="accepted for scripts; output is always deterministic"
    )
    r = common.add_argument_group("ranges")
    r.add_argument("--n", help="level index: 3, 1..3 or 1,2,5")
    r.add_argument("--l", help="angular momentum: 0, -2..2 (write --l=-2..2 for negative starts)")

    parser = argparse.ArgumentParser(
        prog="quadrupole-qes",
        description="Quasi-exact bound states of a rotating magnetic-quadrupole atom with a 1/r potential.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", parents=[common], help="allowed frequencies and energies")
    sp.add_argument("--landau-limit", dest="landau_limit", action="store_true", default=None)
    sp.add_argument("--nr", help="oscillator radial index range for --landau-limit")

    rp = sub.add_parser("roots", parents=[common], help="positive roots of the constraint polynomial")
    rp.add_argument("--dump-poly", dest="dump_poly", action="store_true", default=None)
    rp.add_argument("--strict", action="store_true", default=None)

    wp = sub.add_parser("wavefunction", parents=[common], help="sample F(r) of one mode")
    wp.add_argument("--root-index", dest="root_index", type=int)
    wp.add_argument("--samples", type=int)
    wp.add_argument("--r-max", dest="r_max", type=float)

    vp = sub.add_parser("verify", parents=[common], help="finite-difference cross-check")
    vp.add_argument("--n-points", dest="n_points", type=int)
    vp.add_argument("--r-max", dest="r_max", type=float)
    vp.add_argument("--tol", type=float, help="relative tolerance (default 1e-4)")
    vp.add_argument("--xi-override", dest="xi_override", type=float, help="coupling fed to the numerical operator")
    vp.add_argument("--oscillator", action="store_true", default=None, help="check the xi = 0 ladder")
    vp.add_argument("--no-convergence-check", dest="no_convergence_check", action="store_true", default=None)

    wsp = sub.add_parser("sweep", parents=[common], help="Cartesian sweep over n, l, Omega, theta")
    wsp.add_argument("--Omega-list", dest="Omega_list", help="comma-separated rotation rates")
    wsp.add_argument("--theta-list", dest="theta_list", help="comma-separated theta values")
    wsp.add_argument("--keep-going", dest="keep_going", action="store_true", default=None)
    return parser


def config_keys(parser: argparse.ArgumentParser, command: str) -> dict[str, argparse.Action]:
    """Map config-file keys (long flag names without dashes) to parser actions."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    keys = {}
    for action in sub.choices[command]._actions:
        for opt in action.option_strings:
            if opt.startswith("--") and action.dest not in ("help", "config"):
                keys[opt[2:]] = action
    return keys


def merge_config(parser: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    if args.config:
        keys = config_keys(parser, args.command)
        for key, raw in read_config(args.config).items():
            action = keys.get(key)
            if action is None:
                raise UsageError(f"unknown config key {key!r}")
            if getattr(args, action.dest) is not None:
                continue  # flag wins
            if isinstance(action, argparse._StoreTrueAction):
                value = _bool(raw)
            elif action.type is not None:
                try:
                    value = action.type(raw)
                except ValueError as exc:
                    raise UsageError(f"config key {key!r}: {exc}") from exc
            else:
                value = raw
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
            setattr(args, action.dest, value)
    for dest, value in DEFAULTS.items():
        if getattr(args, dest, None) is None and hasattr(args, dest):
            setattr(args, dest, value)
    return args


def make_config(args: argparse.Namespace) -> RunConfig:
    params = PhysicalParams(
        m=args.m, M_quad=args.M_quad, lambda_=args.lambda_, Omega=args.Omega, theta_pot=args.theta
    )
    grid = {k: getattr(args, k) for k in ("r_max", "n_points") if getattr(args, k, None) is not None}
    options = {
        k: v
        for k, v in vars(args).items()
        if k not in ("m", "M_quad", "lambda_", "Omega", "theta", "n", "l", "format", "out", "omega", "config")
    }
    for key in ("Omega_list", "theta_list"):
        if options.get(key) is not None:
            options[key] = parse_float_list(options[key])
    return RunConfig(
        params=params,
        n_range=parse_range(args.n),
        l_range=parse_range(args.l),
        grid=grid,
        output_format=args.format,
        output_path=args.out,
        omega=args.omega,
        options=options,
    )


def run(argv=None) -> tuple[int, str, str | None]:
    """Execute a command; return (exit code, rendered output, output path)."""
    parser = build_parser()
    args = parser.parse_args(argv)
    args = merge_config(parser, args)
    if args.from_json:
        table = load_json_table(args.from_json)
    else:
        cfg = make_config(args)
        table = COMMANDS[args.command](cfg)
    return table.exit_code, render(table, args.format, with_meta=not args.no_meta), args.out


def main(argv=None) -> int:
    try:
        code, text, out = run(argv)
    except SystemExit as exc:  # argparse errors and --help
        return int(exc.code or 0)
    except (UsageError, InvalidParameters) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NoPositiveRoot as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ROOT
    except QESError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
