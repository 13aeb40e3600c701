"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message text.
"""


class CoexposeError(Exception):
    """Base class for all package errors."""


class ValidationError(CoexposeError, ValueError):
    """Domain-value violation: leanings out of range, bad ids, duplicate pairs."""


class ParseError(CoexposeError, ValueError):
    """Malformed input file; carries a path and 1-based line number when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class ConfigError(CoexposeError, ValueError):
    """Inconsistent or incomplete run configuration."""


class ResourceLimitError(CoexposeError, RuntimeError):
    """Instance exceeds a configured size cap (enumeration cap, memory budget)."""
