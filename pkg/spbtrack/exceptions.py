from pathlib import Path
from typing import Optional, Union


class SpbTrackError(Exception):
    """Base error. ``detail`` is shown to CLI users, ``exit_code`` returned."""

    exit_code: int = 1

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


class ParseError(SpbTrackError):
    def __init__(
        self,
        detail: str,
        path: Optional[Union[str, Path]] = None,
        line: Optional[int] = None,
    ) -> None:
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{detail}")


class UnknownClassError(ParseError):
    pass


class DimensionMismatchError(SpbTrackError):
    pass


class MissingDetectionError(SpbTrackError):
    pass


class ConfigError(SpbTrackError):
    def __init__(self, detail: str, key: Optional[str] = None) -> None:
        self.key = key
        super().__init__(detail if key is None else f"{key}: {detail}")


class UnknownKeyError(ConfigError):
    pass


class ConfigTypeError(ConfigError):
    pass


class RangeViolationError(ConfigError):
    pass


class NonFiniteInputError(SpbTrackError):
    pass


class CholeskyFailureError(SpbTrackError):
    pass


class OutOfOrderFrameError(SpbTrackError):
    pass


class EmptyInputError(SpbTrackError):
    pass


class MissingScoresError(SpbTrackError):
    pass


class InvalidSpecError(SpbTrackError):
    pass
