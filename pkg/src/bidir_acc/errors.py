"""Exception types shared across the package."""


class DomainError(ValueError):
    """A state or argument lies outside the region where a quantity is defined."""


class ParameterError(ValueError):
    """A parameter set violates one of its invariants."""


class PreconditionError(ValueError):
    """An operation was called with inputs that violate its precondition."""


class IntegrationError(RuntimeError):
    """Fixed-step integration could not keep the state inside its admissible set."""


class SizeError(OverflowError):
    """Platoon too large for the weights to be represented in double precision."""


class ProfileBoundError(ValueError):
    """A profile's declared bounds are inconsistent with its values."""


class SolverBlowupError(RuntimeError):
    """The finite-difference solver left the physical state box."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
