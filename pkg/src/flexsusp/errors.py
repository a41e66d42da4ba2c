"""Exception types raised across the package."""


class SuspensionError(Exception):
    """Base class for all errors raised by flexsusp."""


class DegenerateTriangle(SuspensionError):
    def __init__(self, message, face_index=None):
        super().__init__(message)
        self.face_index = face_index


class InfeasibleRadius(SuspensionError):
    def __init__(self, message, vertex_index=None):
        super().__init__(message)
        self.vertex_index = vertex_index


class InfeasibleTurn(SuspensionError):
    def __init__(self, message, vertex_index=None):
        super().__init__(message)
        self.vertex_index = vertex_index


class EmptyInterval(SuspensionError):
    pass


class OutOfRange(SuspensionError):
    pass


class InvalidHalfParams(SuspensionError):
    pass


class FlexCertificationFailed(SuspensionError):
    pass


class PoleError(SuspensionError):
    pass


class PoleAtZero(PoleError):
    pass


class SingularR(SuspensionError):
    pass


class UndefinedDihedral(SuspensionError):
    pass


class DegenerateConfiguration(SuspensionError):
    pass


class ParseError(SuspensionError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaVersionError(SuspensionError):
    pass


class ValidationError(SuspensionError):
    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
