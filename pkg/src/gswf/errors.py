"""Shared exception types.

Each class carries the process exit code the command line layer maps it to,
so library code can raise precise errors without importing the CLI.
"""


class GswfError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class FormatError(GswfError):
    """Malformed input bytes: WAV container, F0 text file, feature file."""

    exit_code = 2


class ValidationError(GswfError):
    """Well-formed input that violates a contract (lengths, ranges, order)."""

    exit_code = 3


class ConfigError(GswfError):
    """Invalid configuration value or combination."""

    exit_code = 4


class DetectionError(ValidationError):
    """GCI detection could not produce a consistent track."""
