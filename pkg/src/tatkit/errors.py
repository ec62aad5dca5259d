"""Exception hierarchy shared by all tatkit modules."""


class TatError(Exception):
    """Base class for all tatkit errors."""


class ValidationError(TatError):
    """Bad shapes, bad arguments, malformed files, exceeded caps."""


class NumericalError(TatError):
    """Overflow, nonpositive normalizers, and similar numeric failures."""


class ToleranceError(TatError):
    """A verification check ran to completion but exceeded its tolerance."""
