from pathlib import Path
from typing import Optional

_state = {"log_file": None, "quiet": False}


def configure(log_file: Optional[str] = None, quiet: bool = False) -> None:
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    _state["log_file"] = log_file
    _state["quiet"] = bool(quiet)


def log(msg: str, log_file: Optional[str] = None, quiet: Optional[bool] = None) -> None:
    """Print a tagged line and mirror it to the run log file when one is set."""
    target = log_file if log_file is not None else _state["log_file"]
    silent = _state["quiet"] if quiet is None else quiet
    if not silent:
        print(msg)
    if target:
        try:
            with open(target, "a", encoding="utf-8") as f:
                f.write(msg + "\n")
        except Exception:
            pass
