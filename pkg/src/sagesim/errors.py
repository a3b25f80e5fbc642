"""Exception types raised across the package."""


class SageError(Exception):
    """Base class for all sagesim errors."""


class ZeroRowError(SageError, ValueError):
    def __init__(self, row):
        super().__init__(f"measurement row {row} has (near) zero norm")
        self.row = row


class DimensionMismatch(SageError, ValueError):
    pass


class InvalidCount(SageError, ValueError):
    pass


class InvalidSchedule(SageError, ValueError):
    pass


class DegenerateGraph(SageError, ValueError):
    pass


class TooLarge(SageError, RuntimeError):
    """Subset enumeration would exceed the configured budget."""


class AllStreamsCompromised(SageError, ValueError):
    pass


class DegenerateSeries(SageError, ValueError):
    pass


class NonFinite(SageError, FloatingPointError):
    def __init__(self, t):
        super().__init__(f"non-finite estimate at iteration {t}")
        self.t = t
