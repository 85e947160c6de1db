"""Exception types shared across the package.

Every failure the library can diagnose is raised as a ConfmodError subclass so
the CLI can map error families onto stable exit codes.
"""

from __future__ import annotations


class ConfmodError(Exception):
    """Base class for all errors raised by this package."""


class DomainValidationError(ConfmodError):
    """A channel domain violates one or more structural constraints.

    Carries the complete list of violations, not just the first one found,
    so a config author can fix a file in one pass.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ConfigError(ConfmodError):
    """A config file is malformed: bad schema version, unknown keys, bad values."""


class SolverError(ConfmodError):
    """A linear solve or grid build failed.

    kind is one of: "divergence", "disconnected", "touching", "budget",
    "degenerate".
    """

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(message)


class VerificationError(ConfmodError):
    """A verification sweep could not produce a usable report."""
