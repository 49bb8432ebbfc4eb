"""Exception hierarchy shared across the package."""


class AdaptrustError(Exception):
    """Base class for all library errors."""


class OutOfRange(AdaptrustError, ValueError):
    pass


class EmptyInput(AdaptrustError, ValueError):
    pass


class DimensionMismatch(AdaptrustError, ValueError):
    pass


class LengthMismatch(DimensionMismatch):
    pass


class SchemaViolation(AdaptrustError, ValueError):
    pass


class UnknownMetadataWord(AdaptrustError, ValueError):
    pass


class ZeroExpectation(AdaptrustError, ValueError):
    """Raised when an expectation vector sums to zero, leaving trust undefined."""


class ZeroTotalDuration(AdaptrustError, ValueError):
    pass


class BadArchitecture(AdaptrustError, ValueError):
    pass


class NoSamples(AdaptrustError, ValueError):
    pass


class ConfigInvalid(AdaptrustError, ValueError):
    pass


class UnratedUsage(AdaptrustError, ValueError):
    pass


class EmptyHistory(AdaptrustError, ValueError):
    pass


class TooFewRecords(AdaptrustError, ValueError):
    pass


class InvalidDataset(AdaptrustError, ValueError):
    """Raised by loaders when a dataset fails validation.

    The offending :class:`~adaptrust.core.ValidationReport` is kept on
    ``self.report``.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class ParseError(AdaptrustError, ValueError):
    """Malformed input file. ``location`` names the file and row/field."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class VersionMismatch(AdaptrustError, ValueError):
    pass
