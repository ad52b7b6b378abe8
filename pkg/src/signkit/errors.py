"""Exception types shared across the toolkit.

All toolkit-raised errors derive from ToolkitError so the CLI can map
user/input problems to exit code 1 and anything else to exit code 2.
"""


class ToolkitError(Exception):
    """Base class for errors caused by invalid inputs or data."""


class ValidationError(ToolkitError, ValueError):
    """A value violates a documented invariant (bad box, bad score, ...)."""


class ParseError(ToolkitError, ValueError):
    """A byte stream could not be decoded (malformed XML, bad CSV cell)."""


class SchemaError(ToolkitError, ValueError):
    """A document is well formed but missing required structure."""
