"""Exception hierarchy shared by the numerical modules and the CLI."""


class LienardError(Exception):
    """Base class for every error raised by lienard_lab."""


class InvalidParameters(LienardError, ValueError):
    """Inputs violate an operation's preconditions (CLI exit code 2)."""


class NumericalFailure(LienardError):
    """A numerical procedure could not produce a trustworthy answer (CLI exit code 3)."""


class StepSizeUnderflow(NumericalFailure):
    def __init__(self, t: float, state, h: float):
        self.t = t
        self.state = tuple(state)
        self.h = h
        super().__init__(
            f"step size underflow (h={h:.3e}) at t={t:.17g}, state={self.state}"
        )


class ConvergenceFailure(NumericalFailure):
    pass


class BracketFailure(NumericalFailure):
    pass


class Anomalous(NumericalFailure):
    """A separatrix crossed the y-axis at y >= 0."""

    def __init__(self, message: str, value: float):
        self.value = value
        super().__init__(message)


class NoOuterBranch(InvalidParameters):
    pass


class NoReturn(NumericalFailure):
    """The orbit did not come back to the negative y-axis."""

    def __init__(self, reason: str, y0: float):
        self.reason = reason
        self.y0 = y0
        super().__init__(f"no return from y0={y0!r}: {reason}")
