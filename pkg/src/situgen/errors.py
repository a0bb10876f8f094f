"""Exception hierarchy shared by every stage of the pipeline."""


class SitugenError(Exception):
    """Base class for all library errors."""


class ParseError(SitugenError):
    """Input bytes are not valid JSON."""


class SchemaError(SitugenError):
    """A required field is missing or has the wrong type.

    ``path`` names the offending location, e.g. ``objects[3].obb.extents``.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ValidationError(SitugenError):
    """Well-formed input that violates a domain invariant."""


class EmptyResult(SitugenError):
    pass


class DegenerateError(SitugenError, ValueError):
    """Geometry is undefined for coincident points."""


class RangeError(SitugenError, ValueError):
    pass


class UnknownId(SitugenError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NoEligiblePivot(SitugenError):
    pass


class DegenerateGeometry(SitugenError):
    pass


class GraphMismatch(SitugenError):
    """The scene graph was built for a different situation than the example."""


class InsufficientScenes(SitugenError):
    pass


class ShapeError(SitugenError, ValueError):
    pass


class NonFiniteGradient(SitugenError, ArithmeticError):
    pass


# LLM client errors; each one is distinguishable by the caller.
class ClientError(SitugenError):
    pass


class AuthError(ClientError):
    pass


class RateLimitExhausted(ClientError):
    pass


class TransportError(ClientError):
    pass


class MalformedResponse(ClientError):
    pass
