"""Exception types shared across the package."""


class PhishkitError(Exception):
    """Base class for all phishkit errors."""


class MalformedUrl(PhishkitError):
    """URL cannot be normalized into scheme/host/path components."""


class ShapeMismatch(PhishkitError):
    """Tensor or batch shapes are inconsistent."""


class SchemaMismatch(PhishkitError):
    """Feature matrix or bundle schema does not match expectations."""


class LengthMismatch(PhishkitError):
    """Parallel sequences have different lengths."""


class DegenerateLabels(PhishkitError):
    """Label vector contains a single class where both are required."""


class DegenerateValidation(DegenerateLabels):
    """Validation split contains a single class; AUC is undefined."""


class EmptyTraining(PhishkitError):
    """Training set is empty."""


class MissingColumn(PhishkitError):
    """Required CSV column is absent."""


class EmptyFile(PhishkitError):
    """Input file holds no data rows."""


class MalformedRow(PhishkitError):
    """Too many unparseable rows in a source file."""


class TooFewGroups(PhishkitError):
    """Not enough domain groups per class to build a leakage-free split."""


class BadMagic(PhishkitError):
    """File does not start with the expected bundle magic."""


class VersionUnsupported(PhishkitError):
    """Bundle format version is not readable by this build."""


class ChecksumMismatch(PhishkitError):
    """A bundle section failed its CRC32 check or is truncated."""
