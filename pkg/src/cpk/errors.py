"""Exception hierarchy shared by the engine and the CLI."""


class CPKError(Exception):
    """Base class for all engine errors."""


class ConfigError(CPKError):
    """Bad input file, schema violation or invalid CLI argument."""


class ContractError(CPKError, ValueError):
    """An operation was called outside its declared domain."""


class SingularInputError(ContractError):
    """Input sits on a pole or branch point of the requested quantity."""


class QuadratureError(CPKError):
    """Adaptive quadrature hit its depth limit before meeting the tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class MatsubaraConvergenceError(CPKError):
    """Matsubara series did not settle within the allowed number of terms."""

    def __init__(self, message, partial_sum=None, last_term=None, n_terms=None):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.last_term = last_term
        self.n_terms = n_terms
