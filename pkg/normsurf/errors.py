import click


class NormalSurfaceError(click.ClickException):
    exit_code = 1


class TriangulationError(NormalSurfaceError):
    pass


class GluingSyntaxError(TriangulationError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class IndexRangeError(TriangulationError):
    pass


class PermutationError(TriangulationError):
    pass


class FaceReuseError(TriangulationError):
    pass


class InvolutionError(TriangulationError):
    pass


class InvalidEdgeError(TriangulationError):
    exit_code = 2

    def __init__(self, tet: int, lower: int, upper: int):
        super().__init__(
            f"edge {lower}-{upper} of tetrahedron {tet} is identified with itself in reverse"
        )
        self.tet = tet
        self.edge = (lower, upper)


class NotCompactError(NormalSurfaceError):
    exit_code = 2


class DimensionError(NormalSurfaceError):
    pass


class VertexIndexError(NormalSurfaceError):
    pass


class NotAdmissibleError(NormalSurfaceError):
    def __init__(
        self,
        message: str,
        *,
        equation: int | None = None,
        position: int | None = None,
    ):
        super().__init__(message)
        self.equation = equation
        self.position = position


class VectorFormatError(NormalSurfaceError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OracleTooLargeError(NormalSurfaceError):
    pass


class EnumerationTimeout(NormalSurfaceError):
    exit_code = 3


class InvariantViolation(NormalSurfaceError):
    exit_code = 4
