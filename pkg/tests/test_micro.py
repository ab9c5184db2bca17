import numpy as np
import pytest

from bidir_acc.core import CubicPotential, MicroState, example1_params
from bidir_acc.errors import DomainError, ParameterError, PreconditionError
from bidir_acc.micro import (IntegratorConfig, closed_form_solution, compliant_initial_state,
                             dist_to_S, example1_initial_state, integrate, read_csv,
                             read_trajectory_csv, spacing_bound_audit, validate_state)


class _PlainCubic:
    """Same potential without a compiled form, forcing the numpy route."""

    def __init__(self, L, lam):
        self._p = CubicPotential(L, lam)
        self.cap_L, self.lam = L, lam

    def value(self, s):
        return self._p.value(s)

    def grad(self, s):
        return self._p.grad(s)

    def hess(self, s):
        return self._p.hess(s)


def test_integrator_config_checks():
    with pytest.raises(ParameterError):
        IntegratorConfig(1e-3, 1.00005, 1)
    with pytest.raises(ParameterError):
        IntegratorConfig(1e-3, 1.0, 3)
    assert IntegratorConfig(1e-3, 2.0, 10).nsteps == 2000


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_matches_closed_form(seed):
    p = example1_params(5)
    x0 = compliant_initial_state(p, seed=seed)
    tr = integrate(x0, p, IntegratorConfig(1e-3, 20.0, 100))
    ex = closed_form_solution(x0, p, tr.t)
    assert np.abs(tr.s - ex.s).max() <= 1e-8
    assert np.abs(tr.v - ex.v).max() <= 1e-8


def test_closed_form_precondition_names_vehicle(ex1):
    x0 = MicroState(np.array([25.0, 15.0, 25, 25, 25]), np.full(6, 30.0))
    with pytest.raises(PreconditionError, match="s_3"):
        closed_form_solution(x0, ex1, 1.0)


def test_kernel_and_numpy_routes_agree(ex1):
    x0 = example1_initial_state(0)
    cfg = IntegratorConfig(1e-3, 2.0, 50)
    a = integrate(x0, ex1, cfg, backend="kernel")
    b = integrate(x0, ex1, cfg, backend="python")
    assert np.abs(a.s - b.s).max() < 1e-10
    assert np.abs(a.v - b.v).max() < 1e-10


def test_generic_potential_uses_numpy_route(ex1):
    p = ex1.replace(potential_override=_PlainCubic(5.0, 20.0))
    x0 = example1_initial_state(2)
    cfg = IntegratorConfig(1e-3, 0.5, 10)
    a = integrate(x0, p, cfg)
    b = integrate(x0, ex1, cfg)
    assert np.abs(a.v - b.v).max() < 1e-10
    with pytest.raises(ValueError):
        integrate(x0, p, cfg, backend="kernel")


def test_rejects_initial_state_outside_omega(ex1):
    bad = MicroState(np.array([4.0, 20, 20, 20, 20]), np.full(6, 30.0))
    with pytest.raises(DomainError):
        integrate(bad, ex1, IntegratorConfig(1e-3, 0.01, 1))


def test_validate_state_reports_each_constraint(ex1):
    st = MicroState(np.array([4.0, 20, 5.0, 20, 20]), np.array([30, 36, 30, -1, 30, 30.0]))
    m = validate_state(st, ex1)
    assert not m.member
    assert m.bad_spacings == (2, 4)
    assert m.bad_speeds == (2, 4)
    assert not m.speed_upper_ok and not m.speed_lower_ok and not m.spacing_ok


def test_coarse_step_uses_substeps_and_stays_in_omega(ex1):
    # head-on closing speeds near the collision distance force step halving at dt = 0.2
    x0 = MicroState(np.array([5.3, 20, 20, 20, 20]), np.array([0.0, 35, 30, 30, 30, 30]))
    tr = integrate(x0, ex1, IntegratorConfig(0.2, 20.0, 1))
    assert tr.meta["deepest_halving"] > 0
    assert tr.s.min() > ex1.cap_L
    assert tr.v.min() >= -1e-9 and tr.v.max() <= ex1.v_max + 1e-9


def test_trajectory_csv_round_trip(tmp_path, ex1):
    tr = integrate(example1_initial_state(0), ex1, IntegratorConfig(1e-3, 1.0, 100))
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    header, _ = read_csv(path)
    assert header == ["t", "s2", "s3", "s4", "s5", "s6", "v1", "v2", "v3", "v4", "v5", "v6"]
    back = read_trajectory_csv(path, ex1)
    assert np.array_equal(back.t, tr.t)
    assert np.array_equal(back.s, tr.s) and np.array_equal(back.v, tr.v)


def test_reruns_are_bitwise_identical(tmp_path, ex1):
    cfg = IntegratorConfig(1e-3, 5.0, 10)
    paths = []
    for k in range(2):
        tr = integrate(example1_initial_state(4), ex1, cfg)
        paths.append(tmp_path / f"r{k}.csv")
        tr.to_csv(paths[-1])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_seeded_initial_state_in_intervals():
    x = example1_initial_state(11)
    assert np.all((x.s > 16) & (x.s < 24)) and np.all((x.v > 27) & (x.v < 34))
    assert np.array_equal(x.v, example1_initial_state(11).v)


def test_dist_to_S(ex1):
    eq = MicroState(np.array([20.0, 25, 30, 20, 21]), np.full(6, 30.0))
    assert dist_to_S(eq, ex1) == 0
    off = MicroState(np.array([17.0, 25, 30, 20, 21]), np.array([34.0, 30, 30, 30, 30, 30]))
    assert dist_to_S(off, ex1) == pytest.approx(5.0)
    with pytest.raises(DomainError):
        dist_to_S(MicroState(np.full(5, 3.0), np.full(6, 30.0)), ex1)


def test_spacing_bound_audit(ex1):
    tr = integrate(example1_initial_state(0), ex1, IntegratorConfig(1e-3, 20.0, 10))
    audit = spacing_bound_audit(tr, ex1)
    assert audit.ok
    assert np.allclose(audit.bound, np.maximum(20.0, tr.s[0]) + 70.0)
