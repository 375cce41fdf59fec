"""Exception hierarchy.

Every domain error carries a stable ``code`` string (the class name) so the
CLI can report it verbatim as ``{"error": code, "detail": ...}``.
"""


class EntdiscError(Exception):
    """Base class for all domain errors."""

    def __init__(self, detail="", **info):
        super().__init__(detail)
        self.detail = detail
        self.info = info

    @property
    def code(self):
        return type(self).__name__

    def to_dict(self):
        out = {"error": self.code, "detail": self.detail}
        out.update(self.info)
        return out


class NonSquare(EntdiscError):
    pass


class NotHermitian(EntdiscError):
    pass


class DimensionMismatch(EntdiscError):
    pass


class NotPSD(EntdiscError):
    pass


class TraceNotOne(EntdiscError):
    pass


class ParameterOutOfRange(EntdiscError):
    pass


class NonLinearApplier(EntdiscError):
    pass


class UnsupportedDim(EntdiscError):
    pass


class MapNotTracePreserving(EntdiscError):
    pass


class DegenerateMap(EntdiscError):
    pass


class NotTA(EntdiscError):
    pass


class NotHermiticityPreserving(EntdiscError):
    pass


class DegenerateTA(EntdiscError):
    pass


class NotDetected(EntdiscError):
    pass


class InconsistentProvenance(EntdiscError):
    pass


class InvalidPOVM(EntdiscError):
    pass


class MalformedInput(EntdiscError):
    pass


class NotPositive(EntdiscError):
    pass
