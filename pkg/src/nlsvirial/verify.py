"""Assemble every identity residual for a finished run into a ResidualReport."""

from __future__ import annotations

import numpy as np

from . import diagnostics as D
from .diagnostics import IdentityResidual, ResidualReport, scale_of, series, tolerance_model
from .errors import ConfigError
from .nonlinearity import check_assumptions
from .propagator import (
    check_factorization,
    duhamel_residual_series,
    galilean_J,
    gradient_operator,
    identity_operator,
)
from .solver import RunConfig, TimeSeries

# Identities evaluated as time series; tolerances default to the error model.
SERIES_IDENTITIES = (
    "charge",
    "energy",
    "momentum",
    "virial",
    "pseudoconformal",
    "cross_identity",
    "expansion",
    "ode_variance",
    "ode_cross",
    "duhamel",
    "duhamel_J",
    "duhamel_grad",
)
# Identities that hold to roundoff regardless of the time step.
EXACT_TOLERANCES = {
    "algebraic_J": 1e-10,
    "summation_by_parts": 1e-12,
    "consistency_chain": 1e-10,
    "factorization": 1e-6,
    "assumptions": 1.0,
}


def default_tolerances(cfg: RunConfig, overrides: dict | None = None) -> dict[str, float]:
    overrides = dict(overrides or {})
    explicit_default = "default" in overrides
    c_step = float(overrides.pop("c_step", 10.0))
    c_sample = float(overrides.pop("c_sample", 10.0))
    model = tolerance_model(cfg.dt, cfg.dt_sample, cfg.t_end, c_step, c_sample)
    base = float(overrides.pop("default", model))
    tol = {name: base for name in SERIES_IDENTITIES}
    if cfg.integrator == "strang" and not explicit_default:
        tol["charge"] = min(base, 1e-10)
    tol.update(EXACT_TOLERANCES)
    unknown = set(overrides) - set(tol)
    if unknown:
        raise ConfigError(f"unknown tolerance key(s): {', '.join(sorted(unknown))}")
    tol.update({k: float(v) for k, v in overrides.items()})
    return tol


def _entry(name, times, values, tol, lhs=None, note=""):
    scale, relative = scale_of(lhs) if lhs is not None else (1.0, False)
    return IdentityResidual(name, np.asarray(times), np.asarray(values, dtype=float), tol[name], scale, relative, note)


def identity_suite(cfg: RunConfig, ts: TimeSeries, tolerances: dict | None = None) -> ResidualReport:
    grid, nl = cfg.grid(), cfg.nonlinearity()
    tol = default_tolerances(cfg, tolerances)
    s = ts.samples
    t = ts.times
    entries: list[IdentityResidual] = []

    cons = D.residual_conservation(s)
    for name in ("charge", "energy", "momentum"):
        entries.append(_entry(name, t, cons[name], tol))

    var, cross = series(s, "variance"), series(s, "cross")
    pc_lhs = series(s, "J_norm2") + 2 * t**2 * series(s, "potential_int")
    entries += [
        _entry("virial", t, D.residual_virial(s), tol, var),
        _entry("pseudoconformal", t, D.residual_pseudoconformal(s), tol, pc_lhs),
        _entry("cross_identity", t, D.residual_cross(s), tol, cross),
        _entry("expansion", t, D.residual_expansion(s), tol, pc_lhs),
    ]
    ode = D.residual_ode(s)
    entries += [
        _entry("ode_variance", t, ode["ode_variance"], tol, 2 * cross),
        _entry("ode_cross", t, ode["ode_cross"], tol, series(s, "grad_norm2")),
        _entry("algebraic_J", t, D.residual_algebraic(s), tol, note="relative per sample"),
    ]

    snaps = ts.snapshots
    if snaps is not None and len(snaps) >= 2:
        st = t[: len(snaps)]
        for name, op in (("duhamel", identity_operator), ("duhamel_J", galilean_J), ("duhamel_grad", gradient_operator)):
            values = duhamel_residual_series(grid, snaps, st, nl, op)
            entries.append(_entry(name, st, values, tol, note="L2 norm"))
    else:
        for name in ("duhamel", "duhamel_J", "duhamel_grad"):
            entries.append(_entry(name, t[:1], [0.0], tol, note="skipped: store_snapshots is off"))

    w = series(s, "W_int")
    if len(t) >= 2:
        h = t[1] - t[0]
        sbp = D.weighted_series(w, h) - (t * D.cumulative_series(w, h) - D.nested_series(w, h))
        sbp_scale = max(1.0, float(np.max(np.abs(t * D.cumulative_series(w, h)))))
        entries.append(IdentityResidual("summation_by_parts", t, sbp, tol["summation_by_parts"], sbp_scale, sbp_scale > 1))
    chain = D.consistency_chain(s)
    entries.append(_entry("consistency_chain", t, chain, tol, var))

    u_end = ts.final_field
    t_end = float(ts.abort_time if ts.abort_time is not None else t[-1])
    if u_end is not None and t_end != 0:
        fac = check_factorization(grid, u_end, t_end)
        xu_scale = max(1.0, max(float(np.max(np.abs(xj * u_end))) for xj in grid.coords))
        entries.append(IdentityResidual("factorization", np.array([t_end]), np.array([fac]), tol["factorization"], xu_scale, xu_scale > 1))

    rng = np.random.default_rng(12345)
    zs = rng.normal(size=200) + 1j * rng.normal(size=200)
    assumptions = check_assumptions(nl, zs, rng)
    worst = max(assumptions.violations[k] / assumptions.tolerances[k] for k in assumptions.violations)
    entries.append(
        IdentityResidual(
            "assumptions", np.array([0.0]), np.array([worst]), tol["assumptions"],
            note="max violation / per-identity tolerance over 200 samples",
        )
    )
    metadata = {
        "dt": cfg.dt,
        "dt_sample": cfg.dt_sample,
        "t_end": cfg.t_end,
        "grid": {"dim": grid.dim, "points": grid.points, "half_width": grid.half_width},
        "status": ts.status,
        "assumption_violations": assumptions.violations,
    }
    return ResidualReport(entries, metadata)


def residual_columns(report: ResidualReport, times) -> dict[str, np.ndarray]:
    """Residual series aligned with ``times`` (NaN where undefined)."""
    n = len(times)
    cols = {}
    for e in report.entries:
        if len(e.times) < 2:
            continue
        col = np.full(n, np.nan)
        col[: len(e.values)] = e.values
        cols[e.name] = col
    return cols
