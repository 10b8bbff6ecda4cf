"""Exception hierarchy shared by the sampler modules."""


class SamplerError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SamplerError, ValueError):
    """Invalid configuration value, unknown key, or violated constraint.

    ``lines`` holds the 1-based line numbers of the offending entries when the
    configuration came from a file.
    """

    def __init__(self, message, lines=None):
        self.lines = tuple(lines or ())
        if self.lines:
            where = ", ".join(str(ln) for ln in self.lines)
            message = f"line {where}: {message}"
        super().__init__(message)


class SchedulingError(SamplerError, RuntimeError):
    """An operation was requested at an iteration where it is not allowed."""


class DivergenceError(SamplerError, FloatingPointError):
    """A chain produced a non-finite gradient or position."""

    def __init__(self, step, message="non-finite state"):
        self.step = step
        super().__init__(f"step {step}: {message}")


class StaleControlVariateError(SamplerError, AssertionError):
    """Cached full-data energy no longer matches the control-variate snapshot."""


class GridTooNarrowError(SamplerError, ValueError):
    """Quadrature grid leaves more than the allowed mass outside its range."""
