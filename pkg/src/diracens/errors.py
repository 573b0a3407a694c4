"""Exception types shared across the package."""


class DiracEnsError(Exception):
    """Base class for all package errors."""


class SeriesError(DiracEnsError, ValueError):
    pass


class ConvergenceError(DiracEnsError):
    """Iteration did not converge; ``last`` holds the final iterate."""

    def __init__(self, msg, last=None, diagnostics=None):
        super().__init__(msg)
        self.last = last
        self.diagnostics = diagnostics or {}


class SingularJacobianError(ConvergenceError):
    pass


class RootFindingError(ConvergenceError):
    pass


class CoverageError(DiracEnsError, KeyError):
    """A correlator table lacks an entry that an equation touches."""

    def __init__(self, index):
        super().__init__(f"table has no entry for (g, lengths) = {index}")
        self.index = index


class ContinuationError(DiracEnsError):
    """Continuation from the Gaussian point stalled (fold or no real branch)."""

    def __init__(self, msg, last_good=None, last_params=None):
        super().__init__(msg)
        self.last_good = last_good
        self.last_params = last_params


class NoRealBranchError(DiracEnsError):
    pass


class NegativeDensityError(DiracEnsError):
    pass


class DegreeGuardError(DiracEnsError):
    pass


class DivergentActionError(DiracEnsError):
    pass


class IllConditionedError(DiracEnsError):
    pass


class ConfigError(DiracEnsError, ValueError):
    pass
