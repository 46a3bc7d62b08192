from __future__ import annotations


class FirmFuzzError(Exception):
    """
    Base class of every error the toolkit raises on purpose.

    The `exit_code` class attribute is the process exit status the CLI maps the error to:
    1 for usage and configuration problems, 2 for a missing external tool or dependency root,
    3 for internal failures.
    """

    exit_code = 3


class InputError(FirmFuzzError):
    """Raised when an operation's precondition is violated by its input."""

    exit_code = 1


class ConfigError(InputError):
    """Raised for an invalid tool config, batch file or campaign set."""


class ValidationError(InputError):
    """Raised when a record or seed does not satisfy its invariants."""


class StatsParseError(InputError):
    """
    Raised when a fuzzer stats text cannot be turned into a sample.

    Example:
    -------
    >>> raise StatsParseError("missing run_time")
    Traceback (most recent call last):
        ...
    StatsParseError: Cannot parse fuzzer stats: missing run_time

    """

    def __init__(self, reason: str) -> None:
        super().__init__(f"Cannot parse fuzzer stats: {reason}")


class UnsupportedFormatError(InputError):
    """Raised when a report format tag is not one of csv, json or gnuplot."""

    def __init__(self, input_value: str) -> None:
        super().__init__(f"Unsupported report format: {input_value}")


class UnknownArchError(InputError):
    """Raised when an architecture label cannot be parsed."""

    def __init__(self, input_value: str) -> None:
        super().__init__(f"Unknown architecture: {input_value}")


class UnknownSignalError(InputError):
    """Raised when a signal label cannot be parsed."""

    def __init__(self, input_value: str) -> None:
        super().__init__(f"Unknown signal: {input_value}")


class ToolEnvironmentError(FirmFuzzError):
    """
    Raised when the host lacks something a command needs: a sysroot, the fuzzer, the emulator or the debugger.

    Args:
    ----
        missing (str): What is missing, e.g. "sysroot for ARM_32".
        hint (str | None): Optional advice appended to the message.

    """

    exit_code = 2

    def __init__(self, missing: str, hint: str | None = None) -> None:
        message = f"Missing dependency: {missing}"
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message)
        self.missing = missing


class ProviderError(FirmFuzzError):
    """Raised when the seed provider cannot be reached or answers with an error."""

    exit_code = 2


class GenerationError(FirmFuzzError):
    """Raised when seed generation runs out of attempts without producing a single seed."""


class StoreError(FirmFuzzError):
    """Raised when the crash store cannot be read or written."""


class FlakyCrashError(FirmFuzzError):
    """Raised when an input that crashed before does not crash (or crashes differently) under the triage oracle."""
