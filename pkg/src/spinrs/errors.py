"""Exception hierarchy shared by every module of the package."""


class SpinRSError(Exception):
    """Base class; ``kind`` is the stable machine-readable name used by the CLI."""

    kind = "SpinRSError"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class NotHermitian(SpinRSError):
    kind = "NotHermitian"


class NotUnitary(SpinRSError):
    kind = "NotUnitary"


class NotPositiveDefinite(SpinRSError):
    kind = "NotPositiveDefinite"


class NotUnipotent(SpinRSError):
    kind = "NotUnipotent"


class DecompositionFailure(SpinRSError):
    kind = "DecompositionFailure"


class IndexOutOfStructure(SpinRSError):
    kind = "IndexOutOfStructure"


class NonRegularTorus(SpinRSError):
    """Raised when torus phases come closer than the regularity tolerance.

    ``last_good_time`` and ``partial`` are filled in by the integrators so that
    callers can keep whatever was computed before the wall was reached.
    """

    kind = "NonRegularTorus"

    def __init__(self, message, min_gap=None, last_good_time=None, partial=None):
        super().__init__(message)
        self.min_gap = min_gap
        self.last_good_time = last_good_time
        self.partial = partial

    def to_dict(self):
        d = super().to_dict()
        d["min_gap"] = self.min_gap
        d["last_good_time"] = self.last_good_time
        return d


class ToleranceExceeded(SpinRSError):
    kind = "ToleranceExceeded"

    def __init__(self, message, partial=None, detail=None):
        super().__init__(message)
        self.partial = partial
        self.detail = detail or {}

    def to_dict(self):
        d = super().to_dict()
        d.update(self.detail)
        return d


class ConfigError(SpinRSError):
    """Configuration problems; ``violations`` lists every field-level message."""

    kind = "ConfigError"

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))

    def to_dict(self):
        d = super().to_dict()
        d["violations"] = self.violations
        return d
