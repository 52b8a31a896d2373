"""Command-line driver: ``fgpc {fim,quad,edges,solve}``.

Every command accepts ``--config FILE`` (JSON, validated against
:data:`SCHEMAS`); flags given on the command line override file values.
Tables go to CSV, solve records to JSON, floats with 17 significant digits.

Exit codes: 0 success, 2 validation failure, 3 failed numerical check,
4 solver non-convergence.  Failures print ``fgpc: <kind>: <reason>`` on one
line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import jsonschema
import numpy as np

from . import analysis
from .chemostat import DATASETS, ChemostatParams
from .edges import EdgeConfig, reconstruct
from .errors import ConvergenceError, FgpcError, StageError
from .fourier import (
    FourierInterpolant,
    PeriodicGrid,
    build_fim_direct,
    build_fim_fast,
    check_twin_symmetry,
    wavenumbers,
)
from .solver import FgpcConfig, preset_config, run_fgpc

EXIT_OK, EXIT_VALIDATION, EXIT_CHECK, EXIT_CONVERGENCE = 0, 2, 3, 4
THREADS_ENV = "SPECPERIOD_THREADS"

_range = {"type": "string", "pattern": r"^\s*[-+0-9.eE]+(\s*[:,]\s*[-+0-9.eE]+)*\s*$"}
_pos_int = {"type": "integer", "minimum": 1}
_functions = {"type": "array", "items": {"type": "string", "pattern": "^f([1-9]|1[0-2])$"}}
_common = {"config": {"type": "string"}, "out": {"type": "string"}, "seed": {"type": "integer"}}

SCHEMAS = {
    "fim": {
        "type": "object",
        "additionalProperties": False,
        "properties": {**_common, "N": _pos_int, "T": {"type": "number", "exclusiveMinimum": 0},
                       "check": {"type": "boolean"}, "bench": {"type": "boolean"},
                       "bench_ratio": {"type": "number", "exclusiveMinimum": 0}},
    },
    "quad": {
        "type": "object",
        "additionalProperties": False,
        "properties": {**_common, "functions": _functions, "N_range": _range,
                       "fits": {"type": "boolean"}, "reconstruction": {"type": "boolean"}, "M": _pos_int},
    },
    "edges": {
        "type": "object",
        "additionalProperties": False,
        "properties": {**_common, "functions": _functions, "N_range": _range, "M_list": _range,
                       "eps_tilde": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.01}},
    },
    "solve": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            **_common,
            "dataset": {"enum": sorted(DATASETS)},
            "params": {
                "type": "object",
                "additionalProperties": False,
                "properties": {k: {"type": "number"} for k in
                               ("s_in", "mu_max", "k_s", "u_min", "u_max", "T")}
                | {"u_bar": {"type": ["number", "string"]}},
            },
            "T": {"type": "number", "exclusiveMinimum": 0},
            "N": _pos_int,
            "M": _pos_int,
            "degrees": {"type": "array", "items": {"type": "integer", "minimum": 0},
                        "minItems": 3, "maxItems": 3},
            "alpha": {"type": "number", "exclusiveMinimum": -0.5},
            "sweep_T": _range,
            "samples": {"type": "integer", "minimum": 2},
            "timings": {"type": "boolean"},
            "plot_dir": {"type": "string"},
        },
    },
}

DEFAULTS = {
    "fim": {"N": 20, "T": 1.0, "check": False, "bench": False, "bench_ratio": 0.5, "seed": 0},
    "quad": {"functions": [f"f{i}" for i in range(1, 7)], "N_range": "110:10:200",
             "fits": False, "reconstruction": False, "M": 100, "seed": 0},
    "edges": {"functions": [f"f{i}" for i in range(6, 13)], "N_range": "200", "M_list": "400",
              "eps_tilde": 0.005, "seed": 0},
    "solve": {"dataset": "D1", "samples": 201, "timings": True, "seed": 0},
}


class CliError(Exception):
    def __init__(self, code: int, kind: str, reason: str):
        super().__init__(reason)
        self.code, self.kind = code, kind


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    """Float with 17 significant digits; integers and strings unchanged."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return format(x, ".17g") if math.isfinite(x) else "nan"
    return str(x)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with sorted keys and 17-digit floats (non-finite floats become null)."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in seq) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (float, np.floating)) and not math.isfinite(float(obj)):
        return "null"
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return fmt(obj)
    return json.dumps(str(obj))


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def parse_range(text: str, kind=float) -> list:
    """``start:step:stop`` (inclusive), a comma list, or a single value."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, step, stop = parts
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [start + i * step for i in range(n)]
        else:
            vals = [float(p) for p in text.split(",")]
    except ValueError:
        raise CliError(EXIT_VALIDATION, "validation", f"bad range {text!r}") from None
    if kind is int:
        if any(v != int(v) for v in vals):
            raise CliError(EXIT_VALIDATION, "validation", f"range {text!r} must be integral")
        return [int(v) for v in vals]
    return vals


def _threads() -> int:
    cap = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if cap is not None:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise CliError(EXIT_VALIDATION, "validation", f"{THREADS_ENV} must be an integer") from None
    return n


def _map(fn, items):
    """Map over independent sweep points, in parallel when allowed; order preserved."""
    items = list(items)
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_fim(opts: dict) -> int:
    grid = PeriodicGrid(opts["T"], opts["N"])
    theta = build_fim_fast(grid).theta
    failures = []
    if opts["check"]:
        lines = []
        if check_twin_symmetry(theta):
            lines.append("twin symmetry OK")
        else:
            failures.append("twin symmetry")
        if np.all(theta[0] == 0.0):
            lines.append("row0 OK")
        else:
            failures.append("row0")
        # random trigonometric polynomial without the Nyquist mode is integrated exactly
        rng = np.random.default_rng(opts["seed"])
        k = wavenumbers(grid.N)
        k = k[(k != 0) & (np.abs(k) < grid.N // 2)][: grid.N // 2 - 1]
        a, b = rng.standard_normal(k.size), rng.standard_normal(k.size)
        w = 2 * np.pi * k / grid.T
        x = grid.nodes
        f = (a[:, None] * np.cos(w[:, None] * x) + b[:, None] * np.sin(w[:, None] * x)).sum(0)
        F = (a[:, None] * np.sin(w[:, None] * x) / w[:, None]
             + b[:, None] * (1 - np.cos(w[:, None] * x)) / w[:, None]).sum(0)
        err = float(np.max(np.abs(theta @ f - F)))
        if err <= 1e-12 * max(1.0, float(np.max(np.abs(F)))):
            lines.append("trig exactness OK")
        else:
            failures.append(f"trig exactness error {err:.3e}")
        print(", ".join(lines) if lines else "checks ran")
    if opts["bench"]:
        reps = 3
        t_fast = min(_timed(build_fim_fast, grid) for _ in range(reps))
        t_direct = min(_timed(build_fim_direct, grid) for _ in range(reps))
        ratio = t_fast / t_direct
        print(f"fast {t_fast:.6f} s, direct {t_direct:.6f} s, ratio {ratio:.4f}")
        if ratio > opts["bench_ratio"]:
            failures.append(f"speed ratio {ratio:.4f} above {opts['bench_ratio']}")
    if opts.get("out"):
        grid_rows = [list(r) for r in theta]
        _emit(write_csv([f"x{j}" for j in range(grid.N)], grid_rows), opts["out"])
    if failures:
        raise CliError(EXIT_CHECK, "check", "; ".join(failures))
    return EXIT_OK


def _timed(fn, *args):
    t = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t


def _quad_row(job):
    name, N = job
    func = analysis.test_corpus()[name]
    err = analysis.fpsq_error_norm(func, N)
    s, bv = func.smoothness.s, func.smoothness.bv_norm
    return [name, N, err, *analysis.fpsq_error_bounds(s, bv, N, 1.0)]


def _recon_row(job):
    name, N, M = job
    return [name, N, M, analysis.reconstruction_integral_error(analysis.test_corpus()[name], N, M)]


def cmd_quad(opts: dict) -> int:
    Ns = parse_range(opts["N_range"], int)
    names = opts["functions"]
    if opts["reconstruction"]:
        bad = [n for n in names if not analysis.test_corpus()[n].jumps]
        if bad:
            raise CliError(EXIT_VALIDATION, "validation", f"reconstruction needs piecewise-constant functions, got {bad}")
        rows = _map(_recon_row, [(n, N, opts["M"]) for n in names for N in Ns])
        _emit(write_csv(["function", "N", "M", "max_abs_error"], rows), opts.get("out"))
        return EXIT_OK
    rows = _map(_quad_row, [(n, N) for n in names for N in Ns])
    if opts["fits"]:
        fits = []
        for n in names:
            sel = [r for r in rows if r[0] == n]
            fit = analysis.power_fit([r[1] for r in sel], [r[2] for r in sel])
            fits.append([n, fit.b, fit.a, fit.rss])
        _emit(write_csv(["function", "slope", "coefficient", "rss"], fits), opts.get("out"))
    else:
        header = ["function", "N", "error", "bound_tight", "bound_relaxed", "bound_asymptotic"]
        _emit(write_csv(header, rows), opts.get("out"))
    return EXIT_OK


def _edge_row(job):
    name, N, M, eps = job
    func = analysis.test_corpus()[name]
    interp = FourierInterpolant.from_function(func, PeriodicGrid(1.0, N))
    rec = reconstruct(interp, EdgeConfig(M, eps))
    true_xi = func.jumps
    rel = [abs(a - b) / b for a, b in zip(rec.xi, true_xi)]
    hi_true, lo_true = max(func.levels), min(func.levels)
    return [name, N, M, rec.xi[0], rec.xi[1], *rel, rec.level_max, rec.level_min,
            abs(rec.level_max - hi_true), abs(rec.level_min - lo_true), rec.starts_high]


def cmd_edges(opts: dict) -> int:
    names = opts["functions"]
    bad = [n for n in names if not analysis.test_corpus()[n].jumps]
    if bad:
        raise CliError(EXIT_VALIDATION, "validation", f"edge detection needs two-jump functions, got {bad}")
    jobs = [(n, N, M, opts["eps_tilde"]) for n in names
            for M in parse_range(opts["M_list"], int) for N in parse_range(opts["N_range"], int)]
    rows = _map(_edge_row, jobs)
    header = ["function", "N", "M", "xi1", "xi2", "rel_err_xi1", "rel_err_xi2", "level_max",
              "level_min", "abs_err_max", "abs_err_min", "starts_high"]
    _emit(write_csv(header, rows), opts.get("out"))
    return EXIT_OK


def _params(opts: dict) -> ChemostatParams:
    base = DATASETS[opts["dataset"]]
    custom = dict(opts.get("params") or {})
    if "u_bar" in custom and isinstance(custom["u_bar"], str):
        try:
            custom["u_bar"] = Fraction(custom["u_bar"])
        except (ValueError, ZeroDivisionError):
            raise CliError(EXIT_VALIDATION, "validation", f"bad u_bar {custom['u_bar']!r}") from None
    if opts.get("T") is not None:
        custom["T"] = opts["T"]
    fields = {f: getattr(base, f) for f in ("s_in", "mu_max", "k_s", "u_min", "u_max", "T", "u_bar")}
    return ChemostatParams(**{**fields, **custom})


def _config(opts: dict) -> FgpcConfig:
    over = {k: (tuple(opts[k]) if k == "degrees" else opts[k])
            for k in ("N", "M", "degrees", "alpha") if opts.get(k) is not None}
    return preset_config(opts["dataset"], **over)


def solution_record(sol, samples: int = 201, timings: bool = True) -> dict:
    """Plain-data summary of an :class:`~fgpc.solver.FgpcSolution`."""
    p, c = sol.params, sol.config
    t = np.linspace(0.0, p.T, samples)
    pred = sol.predictor
    rec = {
        "params": {"s_in": p.s_in, "mu_max": p.mu_max, "k_s": p.k_s, "u_min": p.u_min,
                   "u_max": p.u_max, "T": p.T, "u_bar": float(p.u_bar), "s_bar": p.s_bar},
        "config": {"N": c.N, "M": c.M, "degrees": list(c.degrees), "alpha": c.alpha,
                   "eps_tilde": c.eps_tilde},
        "xi": list(sol.xi),
        "J_p": sol.J_p,
        "J_c": sol.J_c,
        "overyielding": bool(sol.J_c < p.s_bar),
        "iterations": {"predictor": pred.iterations, "corrector": sol.corrector.newton_iterations},
        "predictor": {"converged": pred.converged, "state_in_bounds": pred.state_in_bounds,
                      "projected_gradient": pred.projected_gradient,
                      "constraint_residual": pred.constraint_residual},
        "corrector": {"residual": sol.corrector.residual, "final_state": sol.corrector.final_state,
                      "partition": list(sol.corrector.partition.tau)},
        "control": {"outer_level": sol.control.outer_level, "inner_level": sol.control.inner_level},
        "trajectories": {
            "predicted": {"t": list(pred.grid.nodes), "s": list(pred.state_full), "u": list(pred.u_p)},
            "corrected": {"t": list(t), "s": list(sol.corrector.state_at(t)), "u": list(sol.control(t))},
        },
    }
    if timings:
        rec["timings"] = dict(sol.timings)
    return rec


def _solve_one(job):
    params, config = job
    return run_fgpc(params, config)


def cmd_solve(opts: dict) -> int:
    params = _params(opts)
    config = _config(opts)
    try:
        if opts.get("sweep_T"):
            Ts = parse_range(opts["sweep_T"])
            if any(T <= 0 for T in Ts):
                raise CliError(EXIT_VALIDATION, "validation", "sweep periods must be positive")
            sols = _map(_solve_one, [(params.with_period(T), config) for T in Ts])
            points = []
            for T, sol in sorted(zip(Ts, sols), key=lambda z: z[0]):
                r = {"T": T, "xi": list(sol.xi), "J_p": sol.J_p, "J_c": sol.J_c,
                     "iterations": {"predictor": sol.predictor.iterations,
                                    "corrector": sol.corrector.newton_iterations},
                     "converged": sol.predictor.converged}
                if opts["timings"]:
                    r["timings"] = dict(sol.timings)
                points.append(r)
            J = [r["J_c"] for r in points]
            record = {"dataset": opts["dataset"], "sweep": points,
                      "monotone_nonincreasing": all(b <= a + 1e-2 for a, b in zip(J, J[1:]))}
            converged = all(r["converged"] for r in points)
            if opts.get("plot_dir"):
                from .plotting import plot_sweep
                plot_sweep(record, opts["plot_dir"])
        else:
            sol = run_fgpc(params, config)
            record = {"dataset": opts["dataset"],
                      **solution_record(sol, opts["samples"], opts["timings"])}
            converged = sol.predictor.converged
            if opts.get("plot_dir"):
                from .plotting import plot_solution
                plot_solution(record, opts["plot_dir"])
    except StageError as exc:
        cause = exc.__cause__
        if isinstance(cause, ConvergenceError):
            raise CliError(EXIT_CONVERGENCE, "convergence", str(exc)) from exc
        if isinstance(cause, ValueError):
            raise CliError(EXIT_VALIDATION, "validation", str(exc)) from exc
        raise CliError(EXIT_CHECK, "check", str(exc)) from exc
    _emit(dumps(record) + "\n", opts.get("out"))
    if not converged:
        raise CliError(EXIT_CONVERGENCE, "convergence", "predictor did not reach the projected-gradient tolerance")
    return EXIT_OK


COMMANDS = {"fim": cmd_fim, "quad": cmd_quad, "edges": cmd_edges, "solve": cmd_solve}


# ---------------------------------------------------------------- parsing


def _functions_arg(text):
    return [s.strip() for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fgpc", description="Fourier-Gegenbauer predictor-corrector experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", default=S, help="JSON config file")
        p.add_argument("--out", default=S, help="output file (default stdout)")
        p.add_argument("--seed", type=int, default=S)

    p = sub.add_parser("fim", help="build the Fourier integration matrix and check it")
    common(p)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--check", action="store_true", default=S)
    p.add_argument("--bench", action="store_true", default=S)
    p.add_argument("--bench-ratio", dest="bench_ratio", type=float, default=S)

    p = sub.add_parser("quad", help="quadrature error sweeps over the test corpus")
    common(p)
    p.add_argument("--functions", type=_functions_arg, default=S, help="comma list, e.g. f1,f2")
    p.add_argument("--N-range", dest="N_range", default=S, help="start:step:stop or comma list")
    p.add_argument("--fits", action="store_true", default=S, help="emit fitted slopes instead of errors")
    p.add_argument("--reconstruction", action="store_true", default=S,
                   help="integral errors of the two-level reconstructions")
    p.add_argument("--M", type=int, default=S)

    p = sub.add_parser("edges", help="jump detection and reconstruction errors")
    common(p)
    p.add_argument("--functions", type=_functions_arg, default=S)
    p.add_argument("--N-range", dest="N_range", default=S)
    p.add_argument("--M", dest="M_list", default=S, help="M value(s)")
    p.add_argument("--eps-tilde", dest="eps_tilde", type=float, default=S)

    p = sub.add_parser("solve", help="run the predictor-corrector on a chemostat dataset")
    common(p)
    p.add_argument("--dataset", default=S, choices=sorted(DATASETS))
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--M", type=int, default=S)
    p.add_argument("--degrees", type=lambda s: [int(v) for v in s.split(",")], default=S)
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--sweep-T", dest="sweep_T", default=S, help="start:step:stop or comma list")
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--no-timings", dest="timings", action="store_false", default=S,
                   help="omit wall-clock timings for byte-stable output")
    p.add_argument("--plot-dir", dest="plot_dir", default=S, help="render PNG figures (needs matplotlib)")
    return parser


def resolve_options(command: str, flags: dict) -> dict:
    """Defaults, then the config file, then command-line flags; validated."""
    file_opts = {}
    if "config" in flags:
        try:
            with open(flags["config"], encoding="utf-8") as fh:
                file_opts = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(EXIT_VALIDATION, "validation", f"cannot read config: {exc}") from None
        if not isinstance(file_opts, dict):
            raise CliError(EXIT_VALIDATION, "validation", "config must be a JSON object")
    merged = {**file_opts, **flags}
    try:
        jsonschema.validate(merged, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "config"
        raise CliError(EXIT_VALIDATION, "validation", f"{where}: {exc.message}") from None
    return {**DEFAULTS[command], **merged}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(ns).items() if k != "command"}
    try:
        opts = resolve_options(ns.command, flags)
        return COMMANDS[ns.command](opts)
    except CliError as exc:
        print(f"fgpc: {exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except ConvergenceError as exc:
        print(f"fgpc: convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, FgpcError) as exc:
        print(f"fgpc: validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ImportError as exc:
        print(f"fgpc: validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
