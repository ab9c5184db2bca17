import os
import subprocess
import sys

import numpy as np
import pytest

from bidir_acc.cli import main, run
from bidir_acc.config import parse_config
from bidir_acc.errors import ConfigError
from bidir_acc.micro import read_csv

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

EX1 = """
[experiment]
kind = micro-sim
seed = 0

[model]
preset = example1
mu = 0.5
v_star = 30
v_max = 35
cap_L = 5
lambda = 20
epsilon = 0.2
n = 6

[integrator]
dt = 1e-3
horizon = 2
record_stride = 10
"""


def test_parse_example1_block():
    cfg = parse_config(EX1)
    p = cfg.model_params()
    assert (p.mu, p.v_star, p.v_max, p.cap_L, p.lam, p.epsilon, p.n) == (0.5, 30, 35, 5, 20, 0.2, 6)
    assert cfg.integrator().nsteps == 2000


def test_invariant_violation_is_named():
    bad = EX1.replace("lambda = 20", "lambda = 4")
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    assert any("lambda > cap_L" in e for e in err.value.errors)


def test_unknown_key_listed():
    with pytest.raises(ConfigError) as err:
        parse_config(EX1.replace("mu = 0.5", "mu_typo = 0.5"))
    assert any("mu_typo" in e for e in err.value.errors)


def test_all_errors_reported_together():
    text = EX1.replace("mu = 0.5", "mu_typo = 0.5").replace("[integrator]", "[integrater]")
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert len(err.value.errors) >= 2


@pytest.mark.parametrize("text, needle", [
    ("[experiment]\nkind = nope\n", "experiment.kind"),
    ("[experiment]\nseed = 1\n", "experiment.kind is required"),
    ("not an ini", "malformed"),
    ("[experiment]\nkind = macro-fd\n[grid]\ncfl = 1.5\n", "cfl"),
    ("[experiment]\nkind = micro-sim\n[integrator]\ndt = abc\n", "integrator.dt"),
])
def test_malformed_configs(text, needle):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert needle in str(err.value)


def test_hash_identifies_inputs():
    a, b = parse_config(EX1), parse_config(EX1 + "\n# comment\n")
    assert a.sha256 == b.sha256
    assert a.with_seed(5).sha256 != a.sha256


def test_closed_form_run_passes(tmp_path):
    cfg = parse_config(open(os.path.join(CONFIGS, "closed_form.ini")).read())
    s = run(cfg, str(tmp_path))
    assert s.passed and s.margins["max_abs_error"] <= 1e-8
    assert (tmp_path / "summary.txt").exists()


def test_outputs_bitwise_identical(tmp_path):
    for k in range(2):
        assert main(["run", os.path.join(CONFIGS, "macro_chars.ini"), "--out", str(tmp_path / f"r{k}")]) == 0
    names = sorted(os.listdir(tmp_path / "r0"))
    assert names == sorted(os.listdir(tmp_path / "r1"))
    for n in names:
        assert (tmp_path / "r0" / n).read_bytes() == (tmp_path / "r1" / n).read_bytes()


def test_seed_override_changes_trajectory(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(EX1)
    assert main(["run", str(path), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(path), "--out", str(tmp_path / "b"), "--seed", "9"]) == 0
    _, a = read_csv(tmp_path / "a" / "trajectory.csv")
    _, b = read_csv(tmp_path / "b" / "trajectory.csv")
    assert not np.array_equal(a, b)


def test_config_error_exit_status(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(EX1.replace("mu = 0.5", "mu_typo = 0.5"))
    assert main(["run", str(path), "--out", str(tmp_path)]) == 2
    assert "mu_typo" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "bidir_acc", "run", os.path.join(CONFIGS, "macro_fd.ini"),
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "status = PASS" in r.stdout


@pytest.mark.parametrize("name", ["example1.ini", "closed_form.ini", "lyapunov_audit.ini", "sweep.ini",
                                  "macro_chars.ini", "macro_fd.ini", "bridge.ini"])
def test_shipped_configs_parse(name):
    parse_config(open(os.path.join(CONFIGS, name)).read())
