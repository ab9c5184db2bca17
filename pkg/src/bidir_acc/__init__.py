"""Bidirectional inviscid adaptive cruise control: platoon simulation, Lyapunov audits,
disturbance benchmarks and the continuum model."""
from .core import (MicroState, ModelParams, controller_gains, example1_params, gain_g,
                   micro_vector_field, omega_rate, platoon_params)
from .errors import (ConfigError, DomainError, IntegrationError, ParameterError,
                     PreconditionError, ProfileBoundError, SizeError, SolverBlowupError)
from .micro import IntegratorConfig, Trajectory, closed_form_solution, integrate

__version__ = "0.1.0"
