"""Exception hierarchy shared by every subpackage."""


class WqedError(Exception):
    """Base class for all errors raised by wqed."""


class InvalidArgument(WqedError, ValueError):
    """A parameter violates a documented precondition."""


class GridMismatch(WqedError, ValueError):
    """Two amplitudes live on different frequency grids."""


class ConvergenceFailure(WqedError, RuntimeError):
    """A numerical result is not resolved by the grid or lattice it was computed on."""
