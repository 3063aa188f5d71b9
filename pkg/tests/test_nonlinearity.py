import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsvirial.errors import ConfigError
from nlsvirial.nonlinearity import Nonlinearity, check_assumptions

finite = st.floats(-3, 3, allow_nan=False)
complex_z = st.builds(complex, finite, finite)
powers = st.floats(1.05, 7.0)
lams = st.floats(-2, 2)


def test_f_at_zero_is_zero():
    for p in (1.2, 1.5, 3.0, 5.0):
        nl = Nonlinearity(-1.0, p)
        assert nl.f_apply(np.array([0j]))[0] == 0
        assert nl.v_density(np.array([0j]))[0] == 0
        assert nl.vprime_density(np.array([0j]))[0] == 0
        assert nl.w_density(np.array([0j]), 1)[0] == 0


def test_cubic_focusing_values(cubic_focusing):
    assert cubic_focusing.f_apply(1 + 0j) == -1
    assert cubic_focusing.v_density(1 + 0j) == pytest.approx(-0.5)
    assert cubic_focusing.vprime_density(1j) == pytest.approx(-2.0)
    assert cubic_focusing.w_density(np.exp(0.3j), 1) == pytest.approx(-0.5)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_w_vanishes_at_mass_critical_power(dim, rng):
    nl = Nonlinearity(rng.choice([-1.0, 1.0]), 1 + 4 / dim)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    if dim == 3:
        nl = nl.validate_for(3)
    assert np.all(nl.w_density(z, dim) == 0)


def test_p_range_enforced():
    with pytest.raises(ConfigError):
        Nonlinearity(1.0, 1.0)
    with pytest.raises(ConfigError):
        Nonlinearity(1.0, 5.0).validate_for(3)
    Nonlinearity(1.0, 4.9).validate_for(3)
    Nonlinearity(1.0, 11.0).validate_for(2)
    Nonlinearity(0.0, 3.0)


@settings(max_examples=200, deadline=None)
@given(lam=lams, p=powers, z=complex_z, theta=st.floats(-np.pi, np.pi))
def test_gauge_covariance_and_radial_densities(lam, p, z, theta):
    nl = Nonlinearity(lam, p)
    rot = np.exp(1j * theta)
    scale = max(abs(lam) * abs(z) ** p, 1e-300)
    assert abs(nl.f_apply(rot * z) - rot * nl.f_apply(z)) <= 1e-14 * max(scale, 1.0)
    assert nl.v_density(rot * z) == pytest.approx(nl.v_density(z), rel=1e-14, abs=1e-300)
    assert nl.vprime_density(rot * z) == pytest.approx(nl.vprime_density(z), rel=1e-14, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(lam=lams, p=powers, z=complex_z, dim=st.integers(1, 2))
def test_w_matches_its_definition(lam, p, z, dim):
    nl = Nonlinearity(lam, p)
    by_definition = (dim + 2) * nl.v_density(z) - dim * nl.vprime_density(z) * abs(z) / 2
    scale = abs(lam) * abs(z) ** (p + 1) * (dim + 2)
    assert abs(nl.w_density(z, dim) - by_definition) <= 1e-13 * max(scale, 1e-300)


@settings(max_examples=200, deadline=None)
@given(lam=lams, p=powers, z=complex_z)
def test_pointwise_identity_f_conj_z(lam, p, z):
    nl = Nonlinearity(lam, p)
    lhs = nl.f_apply(z) * np.conj(z)
    rhs = nl.vprime_density(z) * abs(z) / 2
    assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300)
    assert abs(np.imag(np.conj(z) * nl.f_apply(z))) <= 1e-14 * max(abs(lam) * abs(z) ** (p + 1), 1e-300)


def test_wirtinger_derivative_by_central_differences(rng):
    nl = Nonlinearity(-1.0, 3.0)
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    h = 1e-6
    dvx = (nl.v_density(z + h) - nl.v_density(z - h)) / (2 * h)
    dvy = (nl.v_density(z + 1j * h) - nl.v_density(z - 1j * h)) / (2 * h)
    assert np.max(np.abs(0.5 * (dvx + 1j * dvy) - nl.f_apply(z))) <= 1e-6


def test_no_negative_power_at_zero_for_small_p():
    nl = Nonlinearity(2.0, 1.3)
    with np.errstate(divide="raise", invalid="raise"):
        out = nl.f_apply(np.array([0j, 1e-300 + 0j, 2.0 + 0j]))
    assert out[0] == 0 and np.isfinite(out).all()


@pytest.mark.parametrize("lam,p", [(-1.0, 3.0), (1.0, 5.0), (-0.5, 1.5), (2.0, 2.7)])
def test_assumption_checker_passes_power_nonlinearity(lam, p, rng):
    z = 3 * (rng.normal(size=100) + 1j * rng.normal(size=100))
    report = check_assumptions(Nonlinearity(lam, p), z)
    assert report.passed, report.violations
    assert report.violations["Im(conj(z) f(z)) = 0"] <= 1e-14
    assert report.violations["d/ds V(z(s)) = 2Re(f conj(z'))"] <= 1e-6


def test_assumption_checker_exact_for_zero_nonlinearity(rng):
    report = check_assumptions(Nonlinearity(0.0, 3.0), rng.normal(size=10) + 0j)
    assert report.passed
    assert all(v == 0 for v in report.violations.values())


def test_assumption_checker_requires_samples():
    with pytest.raises(ValueError):
        check_assumptions(Nonlinearity(1.0, 3.0), [])


def test_phase_rotation_preserves_modulus(rng):
    nl = Nonlinearity(-1.3, 2.5)
    u = rng.normal(size=64) + 1j * rng.normal(size=64)
    out = nl.phase_rotation(u, 0.37)
    np.testing.assert_allclose(np.abs(out), np.abs(u), rtol=1e-15)
