"""Exception hierarchy shared across the package."""


class PodlabError(Exception):
    """Base class for all errors raised by podlab."""


class InvalidMeshError(PodlabError, ValueError):
    pass


class DimensionError(PodlabError, ValueError):
    pass


class SolverError(PodlabError, RuntimeError):
    """A linear or nonlinear solve failed."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NewtonConvergenceError(SolverError):
    def __init__(self, step, iterations, residual):
        super().__init__(
            f"Newton failed at step {step}: residual {residual:.3e} after {iterations} iterations",
            step=step,
        )
        self.iterations = iterations
        self.residual = residual


class DegenerateEnsembleError(PodlabError, ValueError):
    pass


class SnapshotFileError(PodlabError, IOError):
    pass


class ConfigError(PodlabError, ValueError):
    """Malformed experiment configuration; ``fields`` maps key -> diagnostic."""

    def __init__(self, fields):
        self.fields = dict(fields)
        msg = "; ".join(f"{k}: {v}" for k, v in self.fields.items())
        super().__init__(f"invalid configuration ({msg})")
