"""
Exception hierarchy for MicroNEAT
Each family maps onto one CLI exit code (see EXIT_CODES)
"""
from typing import Optional


class MicroNeatError(Exception):
    """Base class for every error raised by the package"""


class SimInputError(MicroNeatError, ValueError):
    """Rejected simulation input: unknown/dead unit, NaN offset, bad controller output"""


class SpawnError(MicroNeatError):
    """A formation cannot be placed inside the map bounds"""


class ConfigError(MicroNeatError):
    """Invalid configuration, anchored to a file line when one is known"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line

    def __str__(self):
        if self.path and self.line:
            return f"{self.path}:{self.line}: {self.message}"
        if self.path:
            return f"{self.path}: {self.message}"
        return self.message


class GenomeSchemaError(ConfigError):
    """Genome file that this build cannot load (schema version, input/output counts)"""


class OrchestrationError(MicroNeatError):
    """The worker pool has no living workers left"""


# === EXIT CODES ===
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_RUNTIME = 4
EXIT_INTERRUPTED = 130

EXIT_CODES = {
    'ok': EXIT_OK,
    'config': EXIT_CONFIG,
    'io': EXIT_IO,
    'runtime': EXIT_RUNTIME,
    'interrupted': EXIT_INTERRUPTED,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception onto the CLI exit code contract"""
    if isinstance(error, KeyboardInterrupt):
        return EXIT_INTERRUPTED
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_RUNTIME
