import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsvirial import diagnostics as D
from nlsvirial.grid import make_grid
from nlsvirial.nonlinearity import Nonlinearity
from nlsvirial.scenarios import ScenarioSpec, make_initial
from nlsvirial.solver import RunConfig, evolve


@pytest.fixture
def sech_sample(grid1d, cubic_focusing):
    return D.sample(grid1d, 1 / np.cosh(grid1d.axis) + 0j, cubic_focusing, 0.0)


def test_sech_functionals(sech_sample):
    s = sech_sample
    assert s.charge == pytest.approx(2.0, abs=1e-12)
    assert s.grad_norm2 == pytest.approx(2 / 3, abs=1e-12)
    assert s.kinetic == pytest.approx(1 / 3, abs=1e-12)
    assert s.potential_int == pytest.approx(-2 / 3, abs=1e-12)
    assert s.energy == pytest.approx(-1 / 3, abs=1e-12)
    assert s.variance == pytest.approx(np.pi**2 / 6, abs=1e-10)
    assert s.cross == pytest.approx(0.0, abs=1e-14)
    assert s.momentum[0] == pytest.approx(0.0, abs=1e-14)
    assert s.J_norm2 == pytest.approx(s.variance, rel=1e-14)
    assert s.boundary_mass < 1e-12


def test_energy_helper_matches_sample(grid1d, cubic_focusing, sech_sample):
    u = 1 / np.cosh(grid1d.axis) + 0j
    assert D.energy(grid1d, u, cubic_focusing) == pytest.approx(sech_sample.energy, rel=1e-14)


def test_W_integral_for_cubic_1d(sech_sample):
    # n=1, p=3: W = lam |u|^4 (6 - 4)/4 = lam |u|^4 / 2; int sech^4 = 4/3
    assert sech_sample.W_int == pytest.approx(-2 / 3, abs=1e-12)


def test_W_vanishes_at_mass_critical_power():
    g1 = make_grid(1, 256, 10.0)
    s1 = D.sample(g1, 2 * np.exp(-g1.axis**2) + 0j, Nonlinearity(-1.0, 5.0), 0.0)
    g2 = make_grid(2, 64, 8.0)
    s2 = D.sample(g2, np.exp(-g2.radius_squared) + 0j, Nonlinearity(1.0, 3.0), 0.0)
    assert abs(s1.W_int) <= 1e-12 and abs(s2.W_int) <= 1e-12


def test_boost_momentum_equals_velocity_times_charge(grid1d, cubic_focusing):
    init = make_initial(ScenarioSpec("boosted", velocity=(0.93,)), grid1d)
    s = D.sample(grid1d, init.values, cubic_focusing, 0.0)
    assert s.momentum[0] == pytest.approx(init.snapped_velocity[0] * s.charge, abs=1e-10)
    # Galilean boost leaves the cross term equal to v * (first moment) = 0 for centered data
    assert s.cross == pytest.approx(0.0, abs=1e-10)


def test_boundary_mass_sees_mass_near_edge(grid1d, cubic_focusing):
    u = np.exp(-((grid1d.axis - 19.5) ** 2)) + 0j
    s = D.sample(grid1d, u, cubic_focusing, 0.0)
    assert s.boundary_mass > 0.5 * s.charge


def test_sample_in_2d_matches_separable_values():
    g = make_grid(2, 64, 8.0)
    u = np.exp(-g.radius_squared / 2) + 0j
    s = D.sample(g, u, Nonlinearity(0.0, 3.0), 0.0)
    assert s.charge == pytest.approx(np.pi, rel=1e-12)
    assert s.variance == pytest.approx(np.pi, rel=1e-12)
    assert s.grad_norm2 == pytest.approx(np.pi, rel=1e-12)
    assert len(s.momentum) == 2


# quadrature


@pytest.mark.parametrize("m", [1, 2, 17])
def test_quadrature_exact_for_linear_integrands(m):
    h = 0.1
    t = h * np.arange(m + 1)
    g = 2.0 + 3.0 * t
    T = t[-1]
    assert D.cumulative_integral(g, h, m) == pytest.approx(2 * T + 1.5 * T**2, abs=1e-13)
    assert D.nested_double_integral(np.ones_like(t), h, m) == pytest.approx(T**2 / 2, abs=1e-13)
    assert D.weighted_integral(np.ones_like(t), h, m) == pytest.approx(T**2 / 2, abs=1e-13)


def test_quadrature_second_order_on_smooth_integrand():
    errs = []
    for m in (50, 100, 200):
        h = 1.0 / m
        t = h * np.arange(m + 1)
        g = np.cos(3 * t)
        exact_w = (3 * np.sin(3.0) + np.cos(3.0) - 1) / 9
        errs.append(abs(D.weighted_integral(g, h, m) - exact_w))
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_quadrature_at_index_zero_is_zero():
    g = np.array([5.0, 1.0, 2.0])
    assert D.cumulative_integral(g, 0.1, 0) == 0.0
    assert D.weighted_integral(g, 0.1, 0) == 0.0
    assert D.nested_double_integral(g, 0.1, 0) == 0.0


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=300),
    st.floats(1e-4, 1.0),
)
def test_summation_by_parts_holds_for_any_series(g, h):
    g = np.asarray(g)
    t = h * np.arange(len(g))
    c = D.cumulative_series(g, h)
    lhs = D.weighted_series(g, h)
    rhs = t * c - D.nested_series(g, h)
    scale = max(1.0, float(np.max(np.abs(t * c))))
    assert np.max(np.abs(lhs - rhs)) / scale <= 1e-12


def test_spacing_rejects_nonuniform_times():
    with pytest.raises(ValueError):
        D._spacing([0.0, 0.1, 0.3])


# residuals


def _samples(cfg):
    return evolve(cfg).samples


def test_residuals_vanish_at_initial_time(grid1d, cubic_focusing, sech_sample):
    s = [sech_sample]
    for fn in (D.residual_virial, D.residual_pseudoconformal, D.residual_cross, D.residual_expansion, D.consistency_chain):
        assert fn(s)[0] == pytest.approx(0.0, abs=1e-14)


def test_residual_ode_is_nan_at_endpoints_and_zero_for_constant_input():
    base = dict(charge=1.0, kinetic=0.5, potential_int=-0.25, energy=0.25, momentum=(0.0,),
                grad_norm2=1.0, J_norm2=1.0, boundary_mass=0.0)
    # cross = 0 and variance constant: r_var = 0; r_cross = 0 + 1 + 2(-1/4) - W => W = 1/2
    samples = [D.DiagnosticSample(t=0.1 * i, variance=1.0, cross=0.0, W_int=0.5, **base) for i in range(5)]
    ode = D.residual_ode(samples)
    for r in ode.values():
        assert np.isnan(r[0]) and np.isnan(r[-1])
        assert np.allclose(r[1:-1], 0.0, atol=1e-15)


def test_conservation_uses_absolute_measure_for_zero_base():
    base = dict(kinetic=0.5, potential_int=0.0, energy=0.5, variance=1.0, cross=0.0,
                grad_norm2=1.0, W_int=0.0, J_norm2=1.0, boundary_mass=0.0, charge=2.0)
    samples = [D.DiagnosticSample(t=0.0, momentum=(1e-14,), **base),
               D.DiagnosticSample(t=0.1, momentum=(3e-14,), **{**base, "charge": 2.2})]
    r = D.residual_conservation(samples)
    assert r["momentum"][1] == pytest.approx(2e-14)
    assert r["charge"][1] == pytest.approx(0.1)


def test_free_gaussian_residuals_at_roundoff():
    cfg = RunConfig(1, 256, 16.0, 0.0, 3.0, 1e-2, 1.0, sample_every=5, initial=ScenarioSpec("gaussian"))
    s = _samples(cfg)
    for fn in (D.residual_virial, D.residual_pseudoconformal, D.residual_cross, D.residual_expansion):
        assert np.max(np.abs(fn(s))) <= 1e-10
    assert np.max(np.abs(D.consistency_chain(s))) <= 1e-12


def test_consistency_chain_exact_on_soliton_run():
    cfg = RunConfig(1, 256, 20.0, -1.0, 3.0, 1e-2, 1.0, sample_every=3)
    s = _samples(cfg)
    assert np.max(np.abs(D.consistency_chain(s))) <= 1e-12
    assert np.max(D.residual_algebraic(s)) <= 1e-12


def test_identity_residual_bookkeeping():
    r = D.IdentityResidual("x", np.arange(4.0), np.array([np.nan, 1e-3, -2e-3, np.nan]), 1e-3, scale=2.0)
    assert r.max_abs == pytest.approx(1e-3) and r.final_abs == pytest.approx(1e-3)
    assert r.passed and r.verdict == "pass"
    bad = D.IdentityResidual("y", np.arange(2.0), np.array([0.0, np.inf]), 1.0)
    assert not bad.passed
    report = D.ResidualReport([r, bad])
    assert not report.passed and report.names() == ["x", "y"]
    with pytest.raises(KeyError):
        report["z"]


def test_tolerance_model_and_scale():
    assert D.tolerance_model(1e-3, 1e-2, 2.0) == pytest.approx(2e-3)
    assert D.scale_of([0.5, -0.2]) == (1.0, False)
    assert D.scale_of([3.0, -4.0]) == (4.0, True)
