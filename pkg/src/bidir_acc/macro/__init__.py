"""Continuum traffic model: exact characteristics, upwind solver and the platoon comparison."""
from .bridge import BridgeConfig, BridgeReport, initial_platoon, micro_macro_bridge
from .characteristics import (DecayReport, characteristic_state, decay_audit, p_forward,
                              p_invert, traveling_wave, wave_gap_constant)
from .fd import GridConfig, MacroField, fd_solver, sound_speed
from .params import MacroParams, QuarticPhi, example3_params, phi_potential, xi_term
from .profiles import SmoothProfile, constant_profile, example3_density, example3_speed

__all__ = [
    "BridgeConfig", "BridgeReport", "initial_platoon", "micro_macro_bridge",
    "DecayReport", "characteristic_state", "decay_audit", "p_forward", "p_invert",
    "traveling_wave", "wave_gap_constant", "GridConfig", "MacroField", "fd_solver",
    "sound_speed", "MacroParams", "QuarticPhi", "example3_params", "phi_potential", "xi_term",
    "SmoothProfile", "constant_profile", "example3_density", "example3_speed",
]
