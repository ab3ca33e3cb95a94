"""Exception hierarchy for the fronthaul allocation package"""

from typing import Optional


class FronthaulError(Exception):
    """Base class for every error raised by this package"""


class ConfigError(FronthaulError):
    """Invalid configuration file content

    Carries the offending key and the 1-based line number when known.
    """

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = []
        if key is not None:
            location.append(f"key '{key}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class DomainError(FronthaulError, ValueError):
    """Numeric input outside the domain of a model formula"""


class InfeasibleAllocationError(FronthaulError):
    """A bit allocation violates the fronthaul budget or the per-link cap"""


class EnumerationCapError(FronthaulError):
    """Exhaustive enumeration refused because the feasible set is too large"""

    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(
            f"exhaustive enumeration of {size:,} allocations exceeds the cap of {cap:,}"
        )


class OracleFailure(FronthaulError):
    """A validation oracle could not produce a result"""


class ResultIOError(FronthaulError):
    """Reading or writing a result file failed"""

    def __init__(self, path, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")
