import numpy as np
import pytest
from hypothesis import given, strategies as st

from bidir_acc.core import (CubicPotential, MicroState, ModelParams, QuadraticSoftening,
                            controller_gains, example1_params, gain_g, interaction_forces,
                            micro_vector_field, omega_rate, platoon_params)
from bidir_acc.errors import DomainError, ParameterError


def test_cubic_potential_values(ex1):
    pot = ex1.potential
    assert pot.value(10.0) == pytest.approx(200.0)          # 10**3 / 5
    assert pot.value(np.array([20.0, 25.0])).tolist() == [0.0, 0.0]
    with pytest.raises(DomainError):
        pot.value(5.0)


@given(st.floats(5.01, 19.99))
def test_cubic_derivatives_match_finite_differences(s):
    pot = CubicPotential(5.0, 20.0)
    h = 1e-6 * (s - 5.0)
    fd1 = (pot.value(s + h) - pot.value(s - h)) / (2 * h)
    fd2 = (pot.grad(s + h) - pot.grad(s - h)) / (2 * h)
    assert pot.grad(s) == pytest.approx(fd1, rel=1e-5, abs=1e-9)
    assert pot.hess(s) == pytest.approx(fd2, rel=1e-5, abs=1e-9)
    assert pot.grad(s) < 0 and pot.hess(s) >= 0


def test_potential_is_c1_at_interaction_range():
    pot = CubicPotential(5.0, 20.0)
    assert abs(pot.grad(20.0 - 1e-9)) < 1e-15
    assert pot.hess(20.0 - 1e-9) < 1e-7


@given(st.floats(-50, 50), st.floats(0.01, 5))
def test_softening_dominates_ramp(x, eps):
    assert QuadraticSoftening(eps).value(x) >= max(x, 0.0)


@given(st.floats(-1e3, 1e3))
def test_gain_nonnegative(z):
    for p in (example1_params(), platoon_params(5)):
        assert gain_g(z, p) >= 0


def test_softening_is_c1():
    f = QuadraticSoftening(0.2)
    for x0 in (-0.2, 0.0):
        assert f.value(x0 - 1e-12) == pytest.approx(f.value(x0 + 1e-12), abs=1e-10)
        assert f.deriv(x0 - 1e-12) == pytest.approx(f.deriv(x0 + 1e-12), abs=1e-9)


def test_omega_rate_example1(ex1):
    # mu + v_max * (eps / 2) / (v* (v_max - v*))
    assert omega_rate(ex1) == pytest.approx(0.5 + 35 * 0.1 / (30 * 5))


@pytest.mark.parametrize("bad, name", [
    (dict(lam=4.0, cap_L=5.0), "lambda > cap_L"),
    (dict(mu=0.0), "mu > 0"),
    (dict(v_star=40.0), "0 < v_star < v_max"),
    (dict(epsilon=-1.0), "epsilon > 0"),
    (dict(n=1), "n >= 2"),
])
def test_parameter_invariants_named(ex1, bad, name):
    with pytest.raises(ParameterError, match=name):
        ex1.replace(**bad)


def test_interaction_forces_padding(ex1):
    s = np.array([10.0, 30.0, 12.0, 40.0, 25.0])
    dV = ex1.potential.grad(s)
    z = interaction_forces(s, ex1)
    assert z[0] == pytest.approx(-dV[0])
    assert z[-1] == pytest.approx(dV[-1])
    assert z[2] == pytest.approx(dV[1] - dV[2])
    assert z.sum() == pytest.approx(0.0, abs=1e-12)


def _random_omega(params, rng, count):
    s = params.cap_L + (params.lam + 10 - params.cap_L) * (1 - rng.random((count, params.n - 1)))
    v = params.v_max * rng.random((count, params.n))
    return MicroState(s, v)


def test_gains_at_least_mu_on_random_states(ex1, rng):
    st_ = _random_omega(ex1, rng, 2000)
    assert np.all(controller_gains(st_, ex1) >= ex1.mu)


def test_vector_field_keeps_speed_box(ex1, rng):
    # at v = v_max the speed cannot increase, at v = 0 it cannot decrease
    st_ = _random_omega(ex1, rng, 500)
    v = st_.v.copy()
    v[:, 2] = ex1.v_max
    v[:, 4] = 0.0
    d = micro_vector_field(MicroState(st_.s, v), ex1)
    assert np.all(d.v[:, 2] <= 1e-9)
    assert np.all(d.v[:, 4] >= -1e-9)


def test_equilibrium_is_stationary(ex1):
    st_ = MicroState(np.full(5, 25.0), np.full(6, 30.0))
    d = micro_vector_field(st_, ex1)
    assert np.all(d.s == 0) and np.all(d.v == 0)


def test_state_shape_mismatch():
    with pytest.raises(ValueError):
        MicroState(np.ones(3), np.ones(3))


def test_vector_field_rejects_collision(ex1):
    with pytest.raises(DomainError):
        micro_vector_field(MicroState(np.array([5.0, 20, 20, 20, 20]), np.full(6, 30.0)), ex1)


def test_model_params_frozen(ex1):
    with pytest.raises(Exception):
        ex1.mu = 3.0
    assert isinstance(ex1, ModelParams)
