from typing import Any, Dict, List, Optional


class BoardcastError(Exception):
    """Base class for pipeline failures that should end a run."""


class ConfigError(BoardcastError):
    pass


class SourceReadError(BoardcastError):
    def __init__(self, message: str, *, source: str = "") -> None:
        super().__init__(message)
        self.source = source


class DataError(BoardcastError):
    def __init__(self, message: str, *, detail: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.detail = detail or {}


class NonFiniteLossError(BoardcastError):
    def __init__(self, message: str, *, diagnostic: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class TrainingDivergedError(BoardcastError):
    def __init__(self, message: str, *, history: Optional[List[Dict[str, float]]] = None, diagnostic: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.history = history or []
        self.diagnostic = diagnostic or {}


EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_BAD_ARGS = 2
EXIT_BAD_DATA = 3
EXIT_DIVERGED = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_BAD_ARGS
    if isinstance(exc, (DataError, SourceReadError)):
        return EXIT_BAD_DATA
    if isinstance(exc, (TrainingDivergedError, NonFiniteLossError)):
        return EXIT_DIVERGED
    return EXIT_UNEXPECTED
