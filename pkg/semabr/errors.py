"""
Exception classes for semabr
"""


class Error(Exception):
    """Base class for errors in semabr's core."""


class ParametersError(Error):
    """Raised when configuration parameters are invalid."""

    def __init__(self, errors, section: str = None):
        """
        Args:
            errors: The cerberus error tree (or a message).
            section (str, optional): The configuration section that failed.
        """
        self.errors = errors
        self.section = section
        where = " in section '%s'" % section if section else ""
        super(ParametersError, self).__init__(
            "Invalid parameters%s: %s" % (where, errors)
        )


class BadParameterValueError(Error):
    """Error raised when a parameter value is unreasonable."""

    def __init__(self, name: str, value):
        """
        Args:
            name (str): Name of the parameter that caused this error.
            value: The value of the parameter.
        """
        self.name = name
        self.value = value
        super(BadParameterValueError, self).__init__(
            "Parameter %s has unreasonable value of %s" % (name, value)
        )


# Traces


class TraceError(Error):
    """Abstract error class for bandwidth traces."""


class MalformedLineError(TraceError):
    """Raised when a trace line is not two decimal numbers."""

    def __init__(self, line_number: int, line: str, name: str = None):
        self.line_number = line_number
        self.line = line
        self.name = name
        where = " of trace '%s'" % name if name else ""
        super(MalformedLineError, self).__init__(
            "Malformed line %d%s: %r" % (line_number, where, line)
        )


class NonMonotonicTimeError(TraceError):
    """Raised when trace timestamps are not strictly increasing."""


class NegativeBandwidthError(TraceError):
    """Raised when a trace holds a negative bandwidth."""


class TooFewSamplesError(TraceError):
    """Raised when a trace holds fewer than two samples."""


class DuplicateTraceError(TraceError):
    """Raised when two traces of one corpus share a name."""


class EmptyCorpusError(Error):
    """Raised when an operation needs at least one trace."""


# Metrics


class AllClassesEmptyError(Error):
    """Raised when no class of a confusion matrix has a positive union."""


class NonPositiveRatioError(Error):
    """Raised when a compression ratio is not strictly positive."""


class UnknownFilterCountError(Error):
    """Raised for an encoder filter count outside the published set."""


class UnknownCodecError(Error):
    """Raised when a codec is absent from a rate-accuracy table."""


class UnknownBitrateError(Error):
    """Raised when a bitrate is not a knot of a rate-accuracy table."""


class RateTableError(Error):
    """Raised when a rate-accuracy table violates its invariants."""


# Playback


class StallError(Error):
    """Raised when a download can never finish (zero bandwidth on the whole trace)."""


# Policies


class NoHistoryError(Error):
    """Raised when a throughput predictor has no measured sample."""


class SchemeSpecError(Error):
    """Raised when a scheme specification cannot be parsed."""


# Neural networks and training


class ShapeMismatchError(Error):
    """Raised when parameter or input shapes disagree with the architecture."""


class NonFiniteActivationError(Error):
    """Raised when a forward pass produces a non-finite value."""


class NonFiniteParameterError(Error):
    """Raised when a parameter set would hold a non-finite value."""


class FingerprintError(Error):
    """Raised when a parameter file was written for another architecture."""


class NonFiniteUpdateError(Error):
    """Raised when a parameter update would produce a non-finite value."""

    def __init__(self, message: str, epoch: int = None, snapshot: dict = None):
        """
        Args:
            message (str): What failed.
            epoch (int, optional): The training epoch in which it failed.
            snapshot (dict, optional): Parameters and statistics at the failure.
        """
        self.epoch = epoch
        self.snapshot = snapshot
        self.diagnostic_path = None
        if epoch is not None:
            message = "%s (epoch %d)" % (message, epoch)
        super(NonFiniteUpdateError, self).__init__(message)


# Reports


class EmptyInputError(Error):
    """Raised when a statistic is requested over no values."""


class ZeroBaselineError(Error):
    """Raised when a relative gain is taken against a zero baseline."""


class MismatchedTraceSetsError(Error):
    """Raised when schemes were evaluated on different trace sets."""


class IoFailureError(Error):
    """Raised when report files cannot be written."""
