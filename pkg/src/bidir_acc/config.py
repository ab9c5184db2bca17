"""INI-style experiment configuration with strict validation.

Every section is optional; missing keys take the defaults below, unknown
sections or keys are errors.  Lists are comma separated.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .core import MicroState, ModelParams, example1_params, platoon_params
from .disturbance import FtLParams, SweepGrid
from .errors import ConfigError
from .lyapunov import LyapunovConfig
from .macro.bridge import BridgeConfig
from .macro.fd import GridConfig
from .macro.params import MacroParams
from .macro.profiles import example3_density, example3_speed
from .micro import IntegratorConfig, compliant_initial_state, example1_initial_state

KINDS = ("micro-sim", "closed-form-check", "lyapunov-audit", "amplification-sweep",
         "macro-chars", "macro-fd", "micro-macro-bridge")

_FLOAT, _INT, _STR, _FLOATS, _INTS, _STRS = "float", "int", "str", "floats", "ints", "strs"

# section -> key -> (type, default); a default of None means "derived elsewhere"
SCHEMA = {
    "experiment": {"kind": (_STR, None), "seed": (_INT, 0)},
    "model": {"preset": (_STR, "example1"), "mu": (_FLOAT, None), "v_star": (_FLOAT, None),
              "v_max": (_FLOAT, None), "cap_L": (_FLOAT, None), "lambda": (_FLOAT, None),
              "epsilon": (_FLOAT, None), "n": (_INT, None)},
    "initial": {"kind": (_STR, "example1"), "s": (_FLOATS, None), "v": (_FLOATS, None),
                "margin": (_FLOAT, 1.0)},
    "integrator": {"dt": (_FLOAT, 1e-3), "horizon": (_FLOAT, 20.0), "record_stride": (_INT, 1)},
    "lyapunov": {"beta": (_FLOAT, 1.0), "fd_dt": (_FLOAT, 1e-4), "envelope_samples": (_INT, 4096),
                 "claim_states": (_INT, 1000)},
    "ftl": {"a": (_FLOAT, 5.1), "k": (_FLOAT, 1.2), "beta_ftl": (_FLOAT, 34.4),
            "zeta": (_FLOAT, 64.43), "g_max": (_FLOAT, 1.15), "b": (_FLOAT, None),
            "init": (_STR, "lambda")},
    "sweep": {"omega_bars": (_FLOATS, (0.1,)), "ns": (_INTS, (10, 15, 20, 25)),
              "models": (_STRS, ("inviscid", "ftl")), "alpha": (_FLOAT, -2.5),
              "dt": (_FLOAT, 1e-3), "record_stride": (_INT, 10), "horizon": (_FLOAT, None),
              "max_workers": (_INT, 1)},
    "macro": {"omega": (_FLOAT, 1.2), "v_star": (_FLOAT, 1.0), "v_max": (_FLOAT, 2.0),
              "rho_bar": (_FLOAT, 1.0), "rho_max": (_FLOAT, 2.0), "phi_scale": (_FLOAT, 1.0),
              "epsilon": (_FLOAT, 0.2), "m_total": (_FLOAT, None)},
    "profiles": {"density_base": (_FLOAT, 0.1), "density_scale": (_FLOAT, 5.0),
                 "speed_base": (_FLOAT, 1.0), "speed_scale": (_FLOAT, 8.0)},
    "grid": {"x_min": (_FLOAT, -2.0), "x_max": (_FLOAT, 8.0), "dx": (_FLOAT, 0.02),
             "cfl": (_FLOAT, 0.9), "times": (_FLOATS, (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)),
             "boundary": (_STR, "inflow")},
    "bridge": {"ns": (_INTS, (50, 100, 200)), "times": (_FLOATS, (2.0,)), "dt": (_FLOAT, 1e-3),
               "x_min": (_FLOAT, -2.0), "x_max": (_FLOAT, 3.0)},
}


def _convert(kind, text):
    text = text.strip()
    if kind == _FLOAT:
        return float(text)
    if kind == _INT:
        return int(text)
    if kind == _STR:
        return text
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if kind == _FLOATS:
        return tuple(float(p) for p in parts)
    if kind == _INTS:
        return tuple(int(p) for p in parts)
    return tuple(parts)


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    values: dict = field(default_factory=dict)   # section -> key -> typed value (defaults filled)

    def get(self, section, key):
        return self.values[section][key]

    def canonical(self) -> str:
        lines = [f"seed={self.seed}"]
        for sec in sorted(self.values):
            for key in sorted(self.values[sec]):
                lines.append(f"{sec}.{key}={self.values[sec][key]!r}")
        return "\n".join(lines)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        vals = {s: dict(d) for s, d in self.values.items()}
        vals["experiment"]["seed"] = seed
        return ExperimentConfig(self.kind, seed, vals)

    # builders -----------------------------------------------------------
    def model_params(self) -> ModelParams:
        m = self.values["model"]
        preset = m["preset"]
        n = m["n"]
        if preset == "example1":
            base = example1_params(n if n is not None else 6)
        elif preset == "platoon":
            base = platoon_params(n if n is not None else 5)
        else:
            raise ConfigError([f"model.preset must be example1 or platoon (got {preset!r})"])
        over = {"mu": m["mu"], "v_star": m["v_star"], "v_max": m["v_max"], "cap_L": m["cap_L"],
                "lam": m["lambda"], "epsilon": m["epsilon"]}
        return base.replace(**{k: v for k, v in over.items() if v is not None})

    def initial_state(self, params: ModelParams) -> MicroState:
        ini = self.values["initial"]
        kind = ini["kind"]
        if kind == "example1":
            return example1_initial_state(self.seed, params.n)
        if kind == "compliant":
            return compliant_initial_state(params, self.seed, ini["margin"])
        if kind == "explicit":
            if ini["s"] is None or ini["v"] is None:
                raise ConfigError(["initial.s and initial.v are required for kind = explicit"])
            return MicroState(np.array(ini["s"]), np.array(ini["v"]))
        raise ConfigError([f"initial.kind must be example1, compliant or explicit (got {kind!r})"])

    def integrator(self) -> IntegratorConfig:
        i = self.values["integrator"]
        return IntegratorConfig(i["dt"], i["horizon"], i["record_stride"])

    def lyapunov_config(self) -> LyapunovConfig:
        ly = self.values["lyapunov"]
        return LyapunovConfig(ly["beta"], ly["fd_dt"], ly["envelope_samples"])

    def ftl_params(self) -> FtLParams:
        f = self.values["ftl"]
        return FtLParams(f["a"], f["k"], f["beta_ftl"], f["zeta"], f["g_max"], f["b"])

    def sweep_grid(self) -> SweepGrid:
        s = self.values["sweep"]
        bad = [m for m in s["models"] if m not in ("inviscid", "ftl")]
        if bad:
            raise ConfigError([f"sweep.models: unknown model(s) {bad}"])
        return SweepGrid(s["omega_bars"], s["ns"], s["models"], s["alpha"])

    def macro_params(self) -> MacroParams:
        return MacroParams(**self.values["macro"])

    def profiles(self):
        p = self.values["profiles"]
        return (example3_density(p["density_base"], p["density_scale"]),
                example3_speed(p["speed_base"], p["speed_scale"]))

    def grid(self) -> GridConfig:
        g = self.values["grid"]
        return GridConfig(g["x_min"], g["x_max"], g["dx"], g["cfl"], g["times"], g["boundary"])

    def bridge(self) -> BridgeConfig:
        b = self.values["bridge"]
        return BridgeConfig(b["x_min"], b["x_max"], b["times"], b["dt"])


_NEEDS = {
    "micro-sim": ("model", "initial", "integrator"),
    "closed-form-check": ("model", "initial", "integrator"),
    "lyapunov-audit": ("model", "initial", "integrator", "lyapunov"),
    "amplification-sweep": ("model", "ftl", "sweep"),
    "macro-chars": ("macro", "profiles", "grid"),
    "macro-fd": ("macro", "profiles", "grid"),
    "micro-macro-bridge": ("macro", "profiles", "bridge"),
}

_BUILDERS = {
    "model": lambda c: c.model_params(),
    "initial": lambda c: c.initial_state(c.model_params()),
    "integrator": lambda c: c.integrator(),
    "lyapunov": lambda c: c.lyapunov_config(),
    "ftl": lambda c: c.ftl_params(),
    "sweep": lambda c: c.sweep_grid(),
    "macro": lambda c: c.macro_params(),
    "profiles": lambda c: c.profiles(),
    "grid": lambda c: c.grid(),
    "bridge": lambda c: c.bridge(),
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises :class:`ConfigError` listing every problem found."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    cp.optionxform = str          # keys are case sensitive (cap_L)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"malformed config: {exc}"]) from None

    errors = []
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    for sec in cp.sections():
        if sec not in SCHEMA:
            errors.append(f"unknown section [{sec}]")
            continue
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                errors.append(f"unknown key {sec}.{key}")
                continue
            kind = SCHEMA[sec][key][0]
            try:
                values[sec][key] = _convert(kind, raw)
            except ValueError:
                errors.append(f"{sec}.{key}: cannot read {raw!r} as {kind}")

    kind = values["experiment"]["kind"]
    if kind is None:
        errors.append("experiment.kind is required")
    elif kind not in KINDS:
        errors.append(f"experiment.kind must be one of {', '.join(KINDS)} (got {kind!r})")
    if errors:
        raise ConfigError(errors)

    cfg = ExperimentConfig(kind, values["experiment"]["seed"], values)
    for sec in _NEEDS[kind]:
        try:
            _BUILDERS[sec](cfg)
        except ConfigError as exc:
            errors.extend(f"[{sec}] {e}" for e in exc.errors)
        except (ValueError, TypeError) as exc:
            errors.append(f"[{sec}] {exc}")
    if errors:
        raise ConfigError(errors)
    return cfg
