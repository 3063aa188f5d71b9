"""Glassey-type blow-up experiment for focusing data with negative energy.

For ``lam < 0`` and ``p >= 1 + 4/n`` the density ``W`` is nonnegative, so the
virial law bounds the variance by the quadratic ``V0 - 2t M0 + 2t^2 E0``
(with equality at ``p = 1 + 4/n``). When ``E0 < 0`` the quadratic has a
positive root, which bounds the existence time from above.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import series
from .solver import RunConfig, TimeSeries, evolve


@dataclass
class BlowupVerdict:
    criterion_met: bool
    focusing: bool
    supercritical: bool
    initial_energy: float
    initial_variance: float
    initial_cross: float
    predicted_time_bound: float | None
    observed_abort_time: float | None
    variance_curvature_fit: float | None
    fit_window: float | None
    status: str
    message: str

    def as_dict(self) -> dict:
        return asdict(self)


def variance_root(v0: float, m0: float, e0: float) -> float | None:
    """Smallest positive root of ``v0 - 2 m0 t + 2 e0 t^2``."""
    roots = [r.real for r in np.roots([2 * e0, -2 * m0, v0]) if abs(r.imag) < 1e-12 and r.real > 0]
    return min(roots) if roots else None


def analyze(cfg: RunConfig, ts: TimeSeries) -> BlowupVerdict:
    s0 = ts.samples[0]
    focusing = cfg.lam < 0
    supercritical = cfg.p >= 1 + 4 / cfg.dim
    criterion = focusing and supercritical and s0.energy < 0
    bound = variance_root(s0.variance, s0.cross, s0.energy) if criterion else None

    curvature = window = None
    horizon = ts.abort_time if ts.abort_time is not None else float(ts.times[-1])
    t = ts.times
    mask = t <= horizon / 3
    if np.count_nonzero(mask) >= 3:
        window = horizon / 3
        curvature = float(np.polyfit(t[mask], series(ts.samples, "variance")[mask], 2)[0])

    if not criterion:
        reasons = []
        if not focusing:
            reasons.append("lambda >= 0")
        if not supercritical:
            reasons.append(f"p < 1 + 4/n = {1 + 4 / cfg.dim:g}")
        if s0.energy >= 0:
            reasons.append("E(phi) >= 0")
        message = "criterion not met: " + ", ".join(reasons)
    elif ts.status == "blowup":
        message = f"gradient threshold crossed at t = {ts.abort_time:g} (variance bound {bound:g})"
    elif ts.status == "nonfinite":
        message = f"non-finite field at t = {ts.abort_time:g}"
    else:
        message = "no blow-up observed within horizon"
    return BlowupVerdict(
        criterion_met=criterion,
        focusing=focusing,
        supercritical=supercritical,
        initial_energy=s0.energy,
        initial_variance=s0.variance,
        initial_cross=s0.cross,
        predicted_time_bound=bound,
        observed_abort_time=ts.abort_time,
        variance_curvature_fit=curvature,
        fit_window=window,
        status=ts.status,
        message=message,
    )


def glassey_experiment(cfg: RunConfig) -> tuple[BlowupVerdict, TimeSeries]:
    ts = evolve(cfg)
    return analyze(cfg, ts), ts


def curvature_matches(verdict: BlowupVerdict, rel: float = 0.1) -> bool:
    """Fitted ``t^2`` coefficient within ``rel`` of ``2 E(phi)``."""
    if verdict.variance_curvature_fit is None:
        return False
    target = 2 * verdict.initial_energy
    return math.isclose(verdict.variance_curvature_fit, target, rel_tol=rel)
