"""Command-line experiment runner: ``bidir-acc run CONFIG [--out DIR] [--seed N]``."""
from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import lyapunov as ly
from .config import ExperimentConfig, parse_config
from .disturbance import sweep
from .errors import ConfigError
from .macro.bridge import micro_macro_bridge
from .macro.characteristics import characteristic_state, decay_audit
from .macro.fd import MacroField, fd_solver
from .micro import closed_form_solution, integrate, spacing_bound_audit


@dataclass
class RunSummary:
    kind: str
    config_hash: str
    audits: dict = field(default_factory=dict)     # name -> bool
    margins: dict = field(default_factory=dict)    # name -> float
    files: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.audits.values())

    def to_text(self, with_time: bool = False) -> str:
        """Key/value report; wall time is left out by default so reruns compare equal."""
        lines = [f"kind = {self.kind}", f"config_sha256 = {self.config_hash}",
                 f"status = {'PASS' if self.passed else 'FAIL'}"]
        lines += [f"audit.{k} = {'pass' if v else 'fail'}" for k, v in self.audits.items()]
        lines += [f"margin.{k} = {v:.17g}" for k, v in self.margins.items()]
        lines += [f"file = {os.path.basename(f)}" for f in self.files]
        if with_time:
            lines.append(f"wall_time_s = {self.wall_time:.3f}")
        return "\n".join(lines) + "\n"


def _micro(cfg: ExperimentConfig, out: str, summary: RunSummary):
    params = cfg.model_params()
    traj = integrate(cfg.initial_state(params), params, cfg.integrator())
    path = os.path.join(out, "trajectory.csv")
    traj.to_csv(path)
    summary.files.append(path)
    return params, traj


def _run_micro_sim(cfg, out, summary):
    params, traj = _micro(cfg, out, summary)
    sp = spacing_bound_audit(traj, params)
    H = ly.energy_H(traj.states, params)
    rise = np.diff(H) - 1e-9 * (1 + H[:-1])
    summary.audits.update(spacing_bound=sp.ok, energy_nonincreasing=bool(np.all(rise <= 0)))
    summary.margins.update(spacing_bound=sp.tightest_margin, min_spacing=float(traj.s.min()),
                           final_speed_dev=float(np.abs(traj.v[-1] - params.v_star).max()))


def _run_closed_form(cfg, out, summary):
    params, traj = _micro(cfg, out, summary)
    exact = closed_form_solution(traj.state(0), params, traj.t)
    err = max(float(np.abs(traj.s - exact.s).max()), float(np.abs(traj.v - exact.v).max()))
    summary.audits["closed_form_1e-8"] = err <= 1e-8
    summary.margins["max_abs_error"] = err


def _run_lyapunov(cfg, out, summary):
    params, traj = _micro(cfg, out, summary)
    lc = cfg.lyapunov_config()
    tab = ly.certificate_tables(params, lc)
    rep = ly.audit_trajectory(traj, params, lc, tab)
    path = os.path.join(out, "lyapunov_audit.csv")
    rep.to_csv(path)
    summary.files.append(path)
    states = ly.random_omega_states(params, cfg.get("lyapunov", "claim_states"), cfg.seed)
    claims = ly.check_claims(states, params, lc, tab)
    summary.audits.update(sandwich=rep.sandwich_violations == 0, decay=rep.decay_violations == 0,
                          claims=claims.ok)
    summary.margins["worst_decay_margin"] = rep.worst_margin


def _run_sweep(cfg, out, summary):
    s = cfg.values["sweep"]
    res = sweep(cfg.sweep_grid(), cfg.model_params(), cfg.ftl_params(), dt=s["dt"],
                record_stride=s["record_stride"], horizon=s["horizon"],
                ftl_init=cfg.get("ftl", "init"), max_workers=s["max_workers"])
    p1, p2 = os.path.join(out, "sweep.csv"), os.path.join(out, "sweep_summary.csv")
    res.to_csv(p1)
    res.summary_to_csv(p2)
    summary.files += [p1, p2]
    summary.audits["all_cells_ran"] = not res.failures
    for cell, msg in res.failures:
        print(f"cell {cell} failed: {msg}", file=sys.stderr)
    for r in res.reports:
        summary.margins[f"gamma_last.{r.model}.n{r.n}.w{r.omega_bar:g}"] = r.gamma_last


def _run_macro_chars(cfg, out, summary):
    mp, (rho0, v0) = cfg.macro_params(), cfg.profiles()
    g = cfg.grid()
    x, times = g.nodes(), np.asarray(g.times, float)
    rho, v = characteristic_state(times[:, None], x[None, :], rho0, v0, mp)
    summary.files += MacroField(x, times, rho, v).write_slices(out)
    rep = decay_audit(rho0, v0, mp, times, x, field=(rho, v))
    summary.audits["estimates"] = rep.ok
    summary.margins["wave_gap_max"] = float(rep.wave_gap.max())
    summary.margins["wave_gap_bound"] = rep.wave_bound


def _run_macro_fd(cfg, out, summary):
    mp, (rho0, v0) = cfg.macro_params(), cfg.profiles()
    fld = fd_solver(rho0, v0, mp, cfg.grid())
    summary.files += fld.write_slices(out)
    summary.audits["mass_balance"] = fld.meta["max_mass_residual"] <= 1e-10
    summary.margins.update(max_mass_residual=float(fld.meta["max_mass_residual"]),
                           max_xi=float(fld.meta["max_xi"]))


def _run_bridge(cfg, out, summary):
    mp, (rho0, v0) = cfg.macro_params(), cfg.profiles()
    rep = micro_macro_bridge(rho0, v0, mp, cfg.get("bridge", "ns"), cfg.bridge())
    path = os.path.join(out, "bridge.csv")
    rep.to_csv(path)
    summary.files.append(path)
    for T in sorted({r.time for r in rep.rows}):
        _, gaps = rep.gaps(T)
        summary.audits[f"linf_rho_nonincreasing.t{T:g}"] = bool(np.all(np.diff(gaps) <= 0))


_DISPATCH = {
    "micro-sim": _run_micro_sim,
    "closed-form-check": _run_closed_form,
    "lyapunov-audit": _run_lyapunov,
    "amplification-sweep": _run_sweep,
    "macro-chars": _run_macro_chars,
    "macro-fd": _run_macro_fd,
    "micro-macro-bridge": _run_bridge,
}


def run(cfg: ExperimentConfig, out: str = "out") -> RunSummary:
    """Run one experiment, writing its CSVs and ``summary.txt`` into ``out``."""
    os.makedirs(out, exist_ok=True)
    summary = RunSummary(cfg.kind, cfg.sha256)
    t0 = time.perf_counter()
    _DISPATCH[cfg.kind](cfg, out, summary)
    summary.wall_time = time.perf_counter() - t0
    path = os.path.join(out, "summary.txt")
    with open(path, "w") as fh:
        fh.write(summary.to_text())
    return summary


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="bidir-acc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a config file")
    r.add_argument("config")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--seed", type=int, default=None, help="override experiment.seed")
    args = ap.parse_args(argv)

    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    try:
        summary = run(cfg, args.out)
    except Exception as exc:
        print(f"{cfg.kind} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    sys.stdout.write(summary.to_text(with_time=True))
    return 0 if summary.passed else 1


if __name__ == "__main__":
    sys.exit(main())
