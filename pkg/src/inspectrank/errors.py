"""Exception hierarchy shared by all inspectrank modules."""


class InspectRankError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 2


class ParseError(InspectRankError):
    """Malformed input: unknown token, missing column, bad number."""

    def __init__(self, message, row=None, path=None):
        self.row = row
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(ParseError):
    """Well-formed input that violates a domain invariant."""


class ConfigError(InspectRankError):
    """Invalid configuration value."""


class DomainError(InspectRankError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SizeError(InspectRankError):
    """A problem instance exceeds a configured resource limit."""

    exit_code = 3
