"""Exception types shared across the package."""


class SchemaError(ValueError):
    """Dataset header or schema definition problem (names a column when possible)."""


class RowError(ValueError):
    """A data row that cannot be parsed under the schema."""

    def __init__(self, row_index, column, message):
        self.row_index = row_index
        self.column = column
        super().__init__(f"row {row_index}, column {column!r}: {message}")


class SizeLimitError(ValueError):
    """Exact enumeration or exact solving was refused because the instance is too large."""


class ConfigError(ValueError):
    """Malformed run configuration (unknown keys, missing sections, bad types)."""
