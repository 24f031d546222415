"""Exception hierarchy shared by the analysis modules and the CLI."""


class ModelError(ValueError):
    """Base class for every error raised by the library."""


class InvalidParameterError(ModelError):
    """A physical or model parameter is outside its admissible range."""


class InfeasibleBetaError(InvalidParameterError):
    """The residual self-interference factor does not exceed 1/2."""


class InvalidRoleError(ModelError):
    """The receiver is not an addressee under the given own strategy."""


class NoEquilibriumError(ModelError):
    """No mixed equilibrium without strictly dominated actions exists."""


class OutOfBandError(NoEquilibriumError):
    """The requested full-duplex probability lies outside the feasible interval."""
