"""Exception types shared across the solver and the diagnostics."""


class InvalidStateError(ValueError):
    """A conservative state violates positivity (vacuum/invalid state).

    ``cell`` carries the (i, j) index of the offending cell when known.
    """

    def __init__(self, message, cell=None):
        if cell is not None:
            message = f"{message} at cell {cell}"
        super().__init__(message)
        self.cell = cell


class PositivityError(InvalidStateError):
    """A time-step stage produced an invalid state; the run must abort."""

    def __init__(self, message, cell=None, stage=None):
        if stage is not None:
            message = f"{message} in RK stage {stage}"
        super().__init__(message, cell=cell)
        self.stage = stage


class ExperimentPreconditionError(RuntimeError):
    """An experiment cannot run on the given inputs (e.g. zero energy defect)."""
