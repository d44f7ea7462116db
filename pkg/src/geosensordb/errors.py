"""Exception hierarchy shared by every layer.

Each error carries a stable machine-readable ``code`` so the HTTP layer
can emit ``{"code": ..., "message": ...}`` bodies without inspecting types.
"""


class GeoSensorError(Exception):
    code = "internal"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class SridMismatch(GeoSensorError):
    code = "srid_mismatch"


class NonPositiveRadius(GeoSensorError):
    code = "non_positive_radius"


class DuplicateName(GeoSensorError):
    code = "duplicate_name"


class InvalidMeta(GeoSensorError):
    code = "invalid_meta"


class InvalidSchema(GeoSensorError):
    code = "invalid_schema"


class UnknownCoverage(GeoSensorError):
    code = "unknown_coverage"


class UnknownBand(GeoSensorError):
    code = "unknown_band"


class UnknownTile(GeoSensorError):
    code = "unknown_tile"


class UnknownTable(GeoSensorError):
    code = "unknown_table"


class UnknownColumn(GeoSensorError):
    code = "unknown_column"


class UnknownFunction(GeoSensorError):
    code = "unknown_function"


class AmbiguousColumn(GeoSensorError):
    code = "ambiguous_column"


class LengthMismatch(GeoSensorError):
    code = "length_mismatch"


class OutOfRange(GeoSensorError):
    code = "out_of_range"


class TypeMismatch(GeoSensorError):
    code = "type_mismatch"


class DuplicateKey(GeoSensorError):
    code = "duplicate_key"


class EmptyCoverage(GeoSensorError):
    code = "empty_coverage"


class InvalidSupersample(GeoSensorError):
    code = "invalid_supersample"


class EmptyGrid(GeoSensorError):
    code = "empty_grid"


class UnsupportedTiff(GeoSensorError):
    code = "unsupported_tiff"


class UnsupportedGeometry(GeoSensorError):
    code = "unsupported_geometry"


class HeaderError(GeoSensorError):
    code = "header_error"


class CellCountMismatch(GeoSensorError):
    code = "cell_count_mismatch"


class HeaderMismatch(GeoSensorError):
    code = "header_mismatch"


class RowError(GeoSensorError):
    code = "row_error"

    def __init__(self, line: int, column: str, reason: str):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class LexError(GeoSensorError):
    """Bad character or unterminated literal; ``position`` is a byte offset."""

    code = "lex_error"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class ParseError(GeoSensorError):
    code = "parse_error"

    def __init__(self, message: str, position: int, expected=()):
        super().__init__(f"{message} at offset {position}")
        self.position = position
        self.expected = tuple(expected)


class BindError(GeoSensorError):
    """Name-resolution failure during planning; wraps the symbol kind."""

    code = "bind_error"


class QueryRuntimeError(GeoSensorError):
    """Execution-time failure, with query position context when known."""

    code = "runtime_error"

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position
