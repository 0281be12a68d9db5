"""Exception hierarchy with machine-readable codes used by the CLI."""


class RmcurveError(Exception):
    code = "ERROR"


class SpecError(RmcurveError, ValueError):
    """Invalid model input (eigenvalues, fractions, times)."""

    code = "INVALID_SPEC"


class PoleError(RmcurveError, ValueError):
    code = "POLE"


class DegenerateCurveError(RmcurveError):
    """The curve is critical: two branch points (nearly) coincide."""

    code = "DEGENERATE_CURVE"

    def __init__(self, message, min_separation=None):
        super().__init__(message)
        self.min_separation = min_separation


class UnsupportedConfigurationError(RmcurveError):
    """A configuration outside the generic (non-critical) structure."""

    code = "UNSUPPORTED_CONFIGURATION"


class SheetTrackingError(RmcurveError):
    """Homotopy continuation of the fiber roots failed."""

    code = "SHEET_TRACKING_FAILED"


class ScanResolutionError(RmcurveError):
    code = "SCAN_RESOLUTION"

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


class SampleSizeError(RmcurveError, ValueError):
    code = "SAMPLE_TOO_SMALL"
