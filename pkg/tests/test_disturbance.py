import numpy as np
import pytest
from scipy.integrate import quad

from bidir_acc.core import platoon_params
from bidir_acc.disturbance import (DisturbanceSpec, FtLParams, SweepGrid, amplification_factors,
                                   default_config, ftl_G, ftl_G_inverse, ftl_gbar,
                                   measurement_horizon, run_cell, simulate_disturbed_inviscid,
                                   simulate_ftl, sweep)
from bidir_acc.errors import ParameterError, PreconditionError
from bidir_acc.micro import IntegratorConfig

FTL = FtLParams()
P5 = platoon_params(5)


def test_ftl_G_value():
    # 0.5 * 1.15**2 + 1.15 * (61 - 35.55)
    assert float(ftl_G(61.0, FTL)) == pytest.approx(29.92875, abs=1e-12)


@pytest.mark.parametrize("s", [30.0, 34.9, 35.0, 50.0, 64.43, 70.0, 90.0])
def test_ftl_G_is_integral_of_gbar(s):
    val, _ = quad(lambda r: float(ftl_gbar(r, FTL)), FTL.a, s, points=[34.4, 35.55, 64.43], limit=200)
    assert float(ftl_G(s, FTL)) == pytest.approx(val, abs=1e-9)


def test_ftl_gbar_branches_and_continuity():
    assert float(ftl_gbar(34.4, FTL)) == 0.0 and float(ftl_gbar(10.0, FTL)) == 0.0
    for r0 in (FTL.g_max + FTL.b, FTL.zeta):
        assert float(ftl_gbar(r0 - 1e-12, FTL)) == pytest.approx(float(ftl_gbar(r0 + 1e-12, FTL)), abs=1e-9)


def test_ftl_G_inverse():
    s = ftl_G_inverse(30.0, FTL)
    assert float(ftl_G(s, FTL)) == pytest.approx(30.0, abs=1e-10)
    assert s == pytest.approx(61.0 + (30.0 - 29.92875) / 1.15, abs=1e-9)
    with pytest.raises(PreconditionError):
        ftl_G_inverse(100.0, FTL)


@pytest.mark.parametrize("bad", [dict(a=40.0), dict(g_max=2.0), dict(zeta=30.0)])
def test_ftl_invariants(bad):
    with pytest.raises(ParameterError):
        FtLParams(**bad)


def test_spec_range():
    with pytest.raises(PreconditionError):
        DisturbanceSpec(6.0, 0.1).check(P5)
    with pytest.raises(PreconditionError):
        DisturbanceSpec(-31.0, 0.1).check(P5)
    with pytest.raises(ParameterError):
        DisturbanceSpec(1.0, 0.0)


def test_horizon_rule():
    assert measurement_horizon(1.0) == 400.0
    assert measurement_horizon(0.1) == pytest.approx(400 * np.pi)
    cfg = default_config(0.1)
    assert cfg.horizon >= 400 * np.pi and cfg.nsteps % cfg.record_stride == 0


def test_zero_amplitude_is_stationary_and_ratio_undefined():
    spec = DisturbanceSpec(0.0, 0.5)
    tr = simulate_disturbed_inviscid(P5, spec, IntegratorConfig(1e-2, 20.0, 10))
    assert np.all(tr.v == 30.0) and np.all(tr.s == 61.0)
    with pytest.raises(PreconditionError):
        amplification_factors(tr, P5, spec)


def test_positive_leader_pulse_never_reaches_followers():
    spec = DisturbanceSpec(2.5, 0.25)
    tr = simulate_disturbed_inviscid(P5, spec, IntegratorConfig(1e-3, 50.0, 10))
    assert np.abs(tr.v[:, 1:] - 30.0).max() <= 1e-9
    s2 = 61.0 + (2.5 / 0.25) * (1 - np.cos(0.25 * tr.t))
    assert np.abs(tr.s[:, 0] - s2).max() < 1e-9
    rep = amplification_factors(tr, P5, spec)
    assert np.all(rep.gamma == 0) and np.all(rep.delta == 0)


def test_leader_column_is_prescribed():
    spec = DisturbanceSpec(-2.5, 0.25)
    tr = simulate_disturbed_inviscid(P5, spec, IntegratorConfig(1e-3, 10.0, 100))
    assert np.array_equal(tr.v[:, 0], 30.0 - 2.5 * np.sin(0.25 * tr.t))


@pytest.mark.parametrize("model", ["inviscid", "ftl"])
def test_kernel_and_numpy_routes_agree(model):
    spec = DisturbanceSpec(-2.5, 0.25)
    cfg = IntegratorConfig(1e-3, 20.0, 100)
    if model == "inviscid":
        a = simulate_disturbed_inviscid(P5, spec, cfg, backend="kernel")
        b = simulate_disturbed_inviscid(P5, spec, cfg, backend="python")
    else:
        a = simulate_ftl(FTL, P5, spec, cfg, backend="kernel")
        b = simulate_ftl(FTL, P5, spec, cfg, backend="python")
    assert np.abs(a.v - b.v).max() < 1e-10 and np.abs(a.s - b.s).max() < 1e-10


def test_ftl_stationary_at_own_equilibrium():
    tr = simulate_ftl(FTL, P5, DisturbanceSpec(0.0, 0.1), IntegratorConfig(1e-2, 50.0, 10),
                      init="equilibrium")
    assert np.abs(tr.v - 30.0).max() < 1e-9


def test_ftl_lambda_start_drifts_from_mismatch():
    tr = simulate_ftl(FTL, P5, DisturbanceSpec(0.0, 0.1), IntegratorConfig(1e-2, 50.0, 10))
    dev = np.abs(tr.v[:, 1:] - 30.0)
    assert 0 < dev.max() <= 30.0 - 29.92875 + 1e-9


def test_factors_nonnegative_and_finite():
    rep = run_cell("inviscid", 5, 0.25, -2.5, horizon=100.0)
    assert np.all(np.isfinite(rep.gamma)) and np.all(rep.gamma >= 0) and np.all(rep.delta >= 0)
    assert rep.gamma.shape == (4,)


def test_single_cell_sweep_matches_direct_call():
    res = sweep(SweepGrid((0.25,), (5,), ("inviscid",)), horizon=100.0)
    direct = run_cell("inviscid", 5, 0.25, -2.5, horizon=100.0)
    assert np.array_equal(res.reports[0].gamma, direct.gamma)
    assert np.array_equal(res.reports[0].delta, direct.delta)


def test_sweep_failures_are_captured():
    res = sweep(SweepGrid((0.25,), (5,), ("inviscid", "bogus")), horizon=10.0)
    assert len(res.reports) == 1
    assert res.failures and res.failures[0][0][0] == "bogus"


def test_sweep_csv_deterministic(tmp_path):
    grid = SweepGrid((0.25, 0.5), (5,), ("inviscid", "ftl"))
    out = []
    for k in range(2):
        path = tmp_path / f"sweep{k}.csv"
        sweep(grid, horizon=40.0).to_csv(path)
        out.append(path.read_bytes())
    assert out[0] == out[1]
    header, _ = read_csv_header(tmp_path / "sweep0.csv")
    assert header == ["model", "n", "omega_bar", "alpha", "i", "gamma", "delta"]


def read_csv_header(path):
    with open(path) as fh:
        return fh.readline().strip().split(","), None


def test_sweep_parallel_matches_serial():
    grid = SweepGrid((0.25,), (5, 6), ("inviscid",))
    a = sweep(grid, horizon=30.0)
    b = sweep(grid, horizon=30.0, max_workers=2)
    assert [r.gamma.tolist() for r in a.reports] == [r.gamma.tolist() for r in b.reports]


def test_horizon_doubling_stability_at_moderate_frequency():
    a = run_cell("inviscid", 5, 0.25, -2.5)
    b = run_cell("inviscid", 5, 0.25, -2.5, horizon=2 * measurement_horizon(0.25))
    assert np.allclose(a.gamma, b.gamma, rtol=1e-2)
