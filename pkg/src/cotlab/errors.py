"""Exception types shared across the package."""


class CotLabError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(CotLabError, ValueError):
    """An argument lies outside an operation's documented domain."""


class SpaceError(CotLabError, ValueError):
    """A point does not belong to the space an operation expects."""


class TrajectoryError(CotLabError, RuntimeError):
    """A chain-rule step (or answer) left the ambient space.

    Carries the 1-based index of the offending step.
    """

    def __init__(self, step_index: int, message: str):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


class RegimeError(CotLabError, ValueError):
    """A breakpoint was requested outside the parameter regime defining it."""


class FormatError(CotLabError, ValueError):
    """A scenario document is malformed or names an unknown family."""
