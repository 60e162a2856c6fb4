"""Exception hierarchy shared by all solver modules."""


class QESError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameters(QESError, ValueError):
    pass


class NonPositiveRadicand(QESError, ValueError):
    """The frequency lies in the band where no decaying bound-state scale exists."""


class NonPositiveDelta(QESError, ValueError):
    pass


class NegativeRadius(QESError, ValueError):
    pass


class TailNotDecayed(QESError, ValueError):
    pass


class NoPositiveRoot(QESError):
    pass


class ZeroTheta(QESError, ValueError):
    """Raised where a nonzero scalar-potential strength is required."""


class ThetaNotZero(QESError, ValueError):
    pass


class GridTooCoarse(QESError, ValueError):
    pass


class ConvergenceFailure(QESError, RuntimeError):
    pass


class NoMatchingEigenvalue(QESError):
    """No numerical eigenvalue lies near the analytic one.

    The partially filled report is kept on ``self.report`` so callers can
    still emit diagnostics.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
