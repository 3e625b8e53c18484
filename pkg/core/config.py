import os
import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from core.dataset.split import DEFAULT_FRACTIONS
from core.errors import ConfigError
from core.nbeatsx.config import NBeatsXConfig
from core.preprocess.transforms import ALIGN_CENTERED, ALIGN_TRAILING, exclusion_windows_from_config

DEFAULT_CONFIG = "config.json"
SEED_ENV = "BOARDCAST_SEED"


def resolve_config_path(config_path: str) -> Path:
    path = Path(config_path)
    if not path.is_absolute():
        if not path.exists():
            path = Path(__file__).parent / path
    return path


class AppConfig:
    def __init__(self, data: Dict, base_dir: Path) -> None:
        self._data = data
        self._base_dir = base_dir

    @classmethod
    def from_file(cls, config_path: str = DEFAULT_CONFIG) -> "AppConfig":
        path = resolve_config_path(config_path)
        try:
            with open(path, "r", encoding="utf-8-sig") as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {config_path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        return cls(data, path.parent)

    @classmethod
    def empty(cls) -> "AppConfig":
        return cls({}, Path(__file__).parent)

    def to_dict(self) -> Dict:
        return json.loads(json.dumps(self._data))

    def section(self, name: str) -> Dict:
        section = self._data.get(name, {})
        return section if isinstance(section, dict) else {}

    def resolve_path(self, path_str: str) -> str:
        if not path_str:
            return path_str
        path = Path(path_str)
        if not path.is_absolute():
            path = self._base_dir / path
        return str(path)

    def _int(self, name: str, key: str, default: int) -> int:
        try:
            return int(self.section(name).get(key, default))
        except (TypeError, ValueError):
            return default

    def _float(self, name: str, key: str, default: float) -> float:
        try:
            return float(self.section(name).get(key, default))
        except (TypeError, ValueError):
            return float(default)

    def _path(self, name: str, key: str, default: str = "") -> str:
        path = str(self.section(name).get(key, default) or "").strip()
        return self.resolve_path(path) if path else ""

    def env_vars(self) -> Dict:
        return self.section("env_vars")

    def get_env(self, key: str, default: str = "") -> str:
        # os.environ (including values loaded from .env) wins over the env_vars section.
        val = os.environ.get(key)
        if val:
            return val
        val = self.env_vars().get(key)
        if val:
            return str(val)
        return default

    def run_seed(self, default: int = 0) -> int:
        raw = self.get_env(SEED_ENV, "")
        if raw:
            try:
                return int(raw)
            except ValueError:
                raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}")
        return self._int("run", "seed", default)

    def run_out_dir(self, default: str = "../runs") -> str:
        return self._path("run", "out_dir", default)

    def run_log_file(self) -> Optional[str]:
        return self._path("run", "log_file") or None

    def cleaning_limits(self) -> Dict[str, float]:
        return {
            "waiting_max_hours": self._float("cleaning", "waiting_max_hours", 9.0),
            "boarding_max_hours": self._float("cleaning", "boarding_max_hours", 300.0),
            "treatment_max_hours": self._float("cleaning", "treatment_max_hours", 5112.0),
        }

    def exclusion_windows(self) -> List[Tuple[pd.Timestamp, pd.Timestamp]]:
        items = self.section("preprocess").get("exclude_windows")
        try:
            return exclusion_windows_from_config(items)
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ConfigError(f"preprocess.exclude_windows is malformed: {e}") from e

    def rolling_alignment(self, default: str = ALIGN_CENTERED) -> str:
        val = str(self.section("preprocess").get("rolling_alignment", default) or default).strip().lower()
        return val if val in (ALIGN_CENTERED, ALIGN_TRAILING) else default

    def split_fractions(self) -> Tuple[float, float, float]:
        raw = self.section("dataset").get("split", list(DEFAULT_FRACTIONS))
        try:
            train, val, test = (float(x) for x in raw)
        except (TypeError, ValueError):
            return DEFAULT_FRACTIONS
        return train, val, test

    def manifest_dir(self) -> Optional[str]:
        return self._path("dataset", "manifest_dir") or None

    def model_config(self, seed: Optional[int] = None) -> NBeatsXConfig:
        data = dict(self.section("model"))
        dataset = self.section("dataset")
        for key in ("lookback", "horizon"):
            if key in dataset and key not in data:
                data[key] = dataset[key]
        data["seed"] = self.run_seed() if seed is None else int(seed)
        try:
            return NBeatsXConfig.from_dict(data)
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"model section is malformed: {e}") from e

    def tuning_grid_path(self, default: str = "grids/default.json") -> str:
        return self._path("tuning", "grid", default)

    def tuning_pipeline_grid_path(self, default: str = "grids/pipeline.json") -> str:
        return self._path("tuning", "pipeline_grid", default)

    def tuning_workers(self, default: int = 1) -> int:
        return max(1, self._int("tuning", "workers", default))

    def synth_scenario(self, default: str = "default") -> str:
        val = str(self.section("synth").get("scenario", default) or default).strip()
        if Path(val).suffix:
            return self.resolve_path(val)
        return val


def load_config(config_path: Optional[str] = None) -> AppConfig:
    """Config from ``config_path``, the shipped ``config.json``, or built-in defaults."""
    if config_path:
        return AppConfig.from_file(config_path)
    if resolve_config_path(DEFAULT_CONFIG).exists():
        return AppConfig.from_file(DEFAULT_CONFIG)
    return AppConfig.empty()
