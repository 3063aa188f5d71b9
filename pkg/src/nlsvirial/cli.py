"""Command line interface.

Runs are described by TOML files; flags only pick the subcommand, the config,
the output directory and dt / t_end overrides. Exit codes: 0 success,
1 verification failure, 2 configuration error, 3 numerical abort.

The default output directory is taken from ``NLSVIRIAL_OUTPUT_DIR`` and falls
back to ``./nlsvirial-out``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fieldio
from .blowup import analyze, curvature_matches, glassey_experiment
from .errors import ConfigError
from .scenarios import ScenarioSpec, free_gaussian_exact, soliton_exact
from .solver import RunConfig, convergence_order, evolve
from .verify import identity_suite, residual_columns

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("nlsvirial")

OUTPUT_ENV = "NLSVIRIAL_OUTPUT_DIR"
EXIT_OK, EXIT_VERIFY_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3

REQUIRED = ("dimension", "points", "half_width", "lambda", "p", "dt", "t_end")
OPTIONAL = {
    "sample_every": 1,
    "integrator": "strang",
    "store_snapshots": False,
    "max_snapshots": None,
    "boundary_mass_warn": 1e-8,
    "blowup_gradient_factor": 10.0,
}
INITIAL_KEYS = ("kind", "amplitude", "width", "velocity", "center", "path")
TABLES = ("initial", "tolerances")


@dataclass
class LoadedConfig:
    run: RunConfig
    tolerances: dict
    resolved: dict
    source: Path

    @property
    def hash(self) -> str:
        return config_hash(self.resolved)


def config_hash(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _number(raw: dict, key: str, kind=float, where: str = ""):
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{where}{key}' must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"key '{where}{key}' must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _vector(value, key: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),)
    if isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return tuple(float(v) for v in value)
    raise ConfigError(f"key 'initial.{key}' must be a number or a list of numbers")


def parse_config(raw: dict, source: Path | None = None, dt: float | None = None, t_end: float | None = None) -> LoadedConfig:
    unknown = set(raw) - set(REQUIRED) - set(OPTIONAL) - set(TABLES)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(sorted(unknown))}")
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key '{key}'")

    initial_raw = raw.get("initial", {})
    if not isinstance(initial_raw, dict):
        raise ConfigError("'initial' must be a table")
    bad = set(initial_raw) - set(INITIAL_KEYS)
    if bad:
        raise ConfigError(f"unknown key(s) in [initial]: {', '.join(sorted(bad))}")
    initial = ScenarioSpec(
        kind=str(initial_raw.get("kind", "sech")),
        amplitude=_number(initial_raw, "amplitude", where="initial.") if "amplitude" in initial_raw else 1.0,
        width=_number(initial_raw, "width", where="initial.") if "width" in initial_raw else 1.0,
        velocity=_vector(initial_raw["velocity"], "velocity") if "velocity" in initial_raw else (),
        center=_vector(initial_raw["center"], "center") if "center" in initial_raw else (),
        path=str(initial_raw["path"]) if "path" in initial_raw else None,
    )
    if initial.path and source is not None and not Path(initial.path).is_absolute():
        initial = ScenarioSpec(**{**initial.__dict__, "path": str(source.parent / initial.path)})

    tolerances = raw.get("tolerances", {})
    if not isinstance(tolerances, dict):
        raise ConfigError("'tolerances' must be a table")
    for key in tolerances:
        _number(tolerances, key, where="tolerances.")

    opts = {**OPTIONAL, **{k: raw[k] for k in OPTIONAL if k in raw}}
    if not isinstance(opts["store_snapshots"], bool):
        raise ConfigError("key 'store_snapshots' must be true or false")
    run = RunConfig(
        dim=_number(raw, "dimension", int),
        points=_number(raw, "points", int),
        half_width=_number(raw, "half_width"),
        lam=_number(raw, "lambda"),
        p=_number(raw, "p"),
        dt=float(dt) if dt is not None else _number(raw, "dt"),
        t_end=float(t_end) if t_end is not None else _number(raw, "t_end"),
        sample_every=_number(opts, "sample_every", int),
        initial=initial,
        integrator=str(opts["integrator"]),
        boundary_mass_warn=_number(opts, "boundary_mass_warn"),
        blowup_gradient_factor=_number(opts, "blowup_gradient_factor"),
        store_snapshots=opts["store_snapshots"],
        max_snapshots=None if opts["max_snapshots"] is None else _number(opts, "max_snapshots", int),
    )
    # Grid and nonlinearity validate on construction.
    run.grid()
    run.nonlinearity()
    resolved = {
        "dimension": run.dim,
        "points": run.points,
        "half_width": run.half_width,
        "lambda": run.lam,
        "p": run.p,
        "dt": run.dt,
        "t_end": run.t_end,
        "sample_every": run.sample_every,
        "integrator": run.integrator,
        "store_snapshots": run.store_snapshots,
        "max_snapshots": run.max_snapshots,
        "boundary_mass_warn": run.boundary_mass_warn,
        "blowup_gradient_factor": run.blowup_gradient_factor,
        "initial": {
            "kind": initial.kind,
            "amplitude": initial.amplitude,
            "width": initial.width,
            "velocity": list(initial.velocity),
            "center": list(initial.center),
            **({"path": initial.path} if initial.path else {}),
        },
        "tolerances": {k: float(v) for k, v in tolerances.items()},
    }
    return LoadedConfig(run, dict(tolerances), resolved, source or Path("."))


def load_config(path: Path, dt: float | None = None, t_end: float | None = None) -> LoadedConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, path, dt, t_end)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "nlsvirial-out"))


# -- report rendering -------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def report_dict(loaded: LoadedConfig, ts, report, blowup=None) -> dict:
    return _jsonable(
        {
            "config_hash": loaded.hash,
            "config": loaded.resolved,
            "status": ts.status,
            "steps_taken": ts.steps_taken,
            "abort_time": ts.abort_time,
            "snapped_velocity": ts.snapped_velocity,
            "warnings": ts.warnings,
            "passed": report.passed,
            "identities": [
                {
                    "name": e.name,
                    "max_abs": e.max_abs,
                    "final_abs": e.final_abs,
                    "tolerance": e.tolerance,
                    "relative": e.relative,
                    "scale": e.scale,
                    "verdict": e.verdict,
                    "note": e.note,
                }
                for e in report.entries
            ],
            "metadata": report.metadata,
            "blowup": blowup.as_dict() if blowup is not None else None,
        }
    )


def format_table(report) -> str:
    lines = [f"{'identity':<20} {'max residual':>13} {'tolerance':>10}  verdict", "-" * 56]
    for e in report.entries:
        kind = "rel" if e.relative else "abs"
        lines.append(f"{e.name:<20} {e.max_abs:13.3e} {e.tolerance:10.1e}  {e.verdict} ({kind}){'  ' + e.note if e.note.startswith('skipped') else ''}")
    passed = sum(e.passed for e in report.entries)
    lines.append(f"{passed}/{len(report.entries)} identities pass")
    return "\n".join(lines)


@dataclass
class OutputBundle:
    diagnostics_csv: Path
    residual_csv: Path
    report: Path
    config_echo: Path
    plot_script: Path | None
    config_hash: str


def execute(loaded: LoadedConfig, out_dir: Path, plot: bool = False):
    cfg = loaded.run
    ts = evolve(cfg)
    report = identity_suite(cfg, ts, loaded.tolerances)
    blowup = analyze(cfg, ts) if not ts.completed else None
    out_dir = Path(out_dir)
    diag = fieldio.write_diagnostics_csv(out_dir / "diagnostics.csv", ts.samples, cfg.dim)
    resid = fieldio.write_residual_csv(out_dir / "residuals.csv", ts.times, residual_columns(report, ts.times))
    rep = fieldio.atomic_write(out_dir / "report.json", json.dumps(report_dict(loaded, ts, report, blowup), indent=2) + "\n")
    echo = fieldio.atomic_write(
        out_dir / "config.json",
        json.dumps({"config_hash": loaded.hash, "config": loaded.resolved}, indent=2, sort_keys=True) + "\n",
    )
    script = plot_command(diag, resid, out_dir / "plot.gp") if plot else None
    return OutputBundle(diag, resid, rep, echo, script, loaded.hash), ts, report, blowup


def run_command(config: Path, out_dir: Path, dt=None, t_end=None, plot=False) -> int:
    loaded = load_config(config, dt, t_end)
    bundle, ts, report, blowup = execute(loaded, out_dir, plot)
    print(f"status: {ts.status}  steps: {ts.steps_taken}  config hash: {bundle.config_hash[:16]}")
    print(f"wrote {bundle.diagnostics_csv}, {bundle.residual_csv}, {bundle.report}")
    if blowup is not None:
        print(blowup.message)
        return EXIT_ABORT
    return EXIT_OK


def verify_command(config: Path, out_dir: Path, dt=None, t_end=None) -> int:
    loaded = load_config(config, dt, t_end)
    bundle, ts, report, blowup = execute(loaded, out_dir)
    print(format_table(report))
    if blowup is not None:
        print(blowup.message)
        return EXIT_ABORT
    return EXIT_OK if report.passed else EXIT_VERIFY_FAIL


def _exact_reference(cfg: RunConfig):
    spec = cfg.initial
    plain = spec.amplitude == 1.0 and spec.width == 1.0 and not any(spec.velocity) and not any(spec.center)
    if cfg.dim == 1 and plain:
        if spec.kind == "sech" and cfg.lam == -1.0 and cfg.p == 3.0:
            return soliton_exact, "exact soliton"
        if spec.kind == "gaussian" and cfg.lam == 0.0:
            return free_gaussian_exact, "exact free Gaussian"
    return None, "finest-dt reference (dt_min / 4)"


def convergence_command(config: Path, dts, integrator: str | None = None, t_end=None) -> int:
    loaded = load_config(config, t_end=t_end)
    cfg = loaded.run
    if integrator is not None:
        cfg = RunConfig(**{**cfg.__dict__, "integrator": integrator})
    exact, label = _exact_reference(cfg)
    result = convergence_order(cfg, dts, exact)
    print(f"integrator: {cfg.integrator}  reference: {label}")
    for dt, err in sorted(zip(result.dts, result.errors)):
        print(f"  dt = {dt:.3e}  L2 error = {err:.6e}")
    print(f"fitted order: {result.order:.3f}")
    if not result.reliable:
        print(f"fit unreliable: {result.reason}")
    return EXIT_OK


def blowup_command(config: Path, t_end=None) -> int:
    loaded = load_config(config, t_end=t_end)
    verdict, ts = glassey_experiment(loaded.run)
    for key, value in verdict.as_dict().items():
        print(f"{key}: {value}")
    if verdict.criterion_met and verdict.variance_curvature_fit is not None:
        print(f"quadratic coefficient vs 2E(phi): {'agree' if curvature_matches(verdict) else 'differ'} within 10%")
    return EXIT_OK


PLOT_REQUIRED = ("t", "variance", "energy")


def plot_command(diagnostics_csv: Path, residual_csv: Path | None = None, script_path: Path | None = None) -> Path:
    """Write a gnuplot script rendering variance, energy drift and residuals to PNG files."""
    diagnostics_csv = Path(diagnostics_csv)
    cols = fieldio.read_csv_columns(diagnostics_csv)
    for name in PLOT_REQUIRED:
        if name not in cols:
            raise ConfigError(f"{diagnostics_csv}: missing column '{name}'")
    if residual_csv is None and (diagnostics_csv.parent / "residuals.csv").exists():
        residual_csv = diagnostics_csv.parent / "residuals.csv"
    residual_names = []
    if residual_csv is not None:
        rcols = fieldio.read_csv_columns(Path(residual_csv))
        if "t" not in rcols:
            raise ConfigError(f"{residual_csv}: missing column 't'")
        residual_names = [c for c in rcols if c != "t"]
    e0 = cols["energy"][0] if len(cols["energy"]) else 0.0
    stem = diagnostics_csv.parent
    lines = [
        "# gnuplot script; run with: gnuplot plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set terminal pngcairo size 900,600",
        "set xlabel 't'",
        f"diag = '{diagnostics_csv.resolve()}'",
        f"E0 = {fieldio.fmt(e0)}",
        f"set output '{(stem / 'variance.png').resolve()}'",
        "set ylabel 'variance'",
        "plot diag using (column('t')):(column('variance')) with lines title 'variance'",
        f"set output '{(stem / 'energy_drift.png').resolve()}'",
        "set ylabel 'E(t) - E(0)'",
        "plot diag using (column('t')):(column('energy') - E0) with lines title 'energy drift'",
    ]
    if residual_names:
        lines += [
            f"resid = '{Path(residual_csv).resolve()}'",
            f"set output '{(stem / 'residuals.png').resolve()}'",
            "set ylabel '|residual|'",
            "set logscale y",
            "plot " + ", \\\n     ".join(
                f"resid using (column('t')):(abs(column('{n}'))) with lines title '{n}'" for n in residual_names
            ),
            "unset logscale y",
        ]
    lines.append("unset output")
    out = Path(script_path) if script_path is not None else stem / "plot.gp"
    return fieldio.atomic_write(out, "\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlsvirial", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("config", type=Path)
        p.add_argument("-o", "--output", type=Path, default=None, help=f"output directory (default ${OUTPUT_ENV} or ./nlsvirial-out)")
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-end", type=float, default=None)

    p = sub.add_parser("run", help="evolve and write diagnostics, residuals and report")
    add_run_args(p)
    p.add_argument("--plot", action="store_true", help="also write a gnuplot script")
    p = sub.add_parser("verify", help="run the identity suite and print a pass/fail table")
    add_run_args(p)
    p = sub.add_parser("convergence", help="fit the time-step convergence order")
    p.add_argument("config", type=Path)
    p.add_argument("--dts", type=float, nargs="+", default=[4e-3, 2e-3, 1e-3])
    p.add_argument("--integrator", choices=("strang", "rk4-oracle"), default=None)
    p.add_argument("--t-end", type=float, default=None)
    p = sub.add_parser("blowup", help="evaluate the blow-up criterion and run into the singularity")
    p.add_argument("config", type=Path)
    p.add_argument("--t-end", type=float, default=None)
    p = sub.add_parser("plot", help="write a gnuplot script for a diagnostics CSV")
    p.add_argument("diagnostics", type=Path)
    p.add_argument("--residuals", type=Path, default=None)
    p.add_argument("-o", "--output", type=Path, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return run_command(args.config, args.output or default_output_dir(), args.dt, args.t_end, args.plot)
        if args.command == "verify":
            return verify_command(args.config, args.output or default_output_dir(), args.dt, args.t_end)
        if args.command == "convergence":
            return convergence_command(args.config, args.dts, args.integrator, args.t_end)
        if args.command == "blowup":
            return blowup_command(args.config, args.t_end)
        if args.command == "plot":
            print(plot_command(args.diagnostics, args.residuals, args.output))
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
