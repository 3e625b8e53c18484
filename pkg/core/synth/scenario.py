import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict

import pandas as pd

from core.errors import ConfigError
from core.ingest.records import RAW_WEATHER_CONDITIONS
from core.preprocess.transforms import WEATHER_CATEGORIES

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


@dataclass(frozen=True)
class DurationSpec:
    """Log-normal duration in hours, given by its mean and coefficient of variation."""

    mean_hours: float
    cv: float

    def validate(self, name: str) -> None:
        if self.mean_hours <= 0 or self.cv <= 0:
            raise ConfigError(f"{name}: mean_hours and cv must be positive")


def _default_esi_mix() -> Dict[str, float]:
    return {"1": 0.02, "2": 0.25, "3": 0.58, "4": 0.13, "5": 0.015, "OB": 0.005}


def _default_conditions() -> Dict[str, float]:
    return {
        "Clear": 0.36, "Clouds": 0.30, "Rain": 0.10, "Mist": 0.07, "Thunderstorm": 0.03,
        "Drizzle": 0.04, "Fog": 0.03, "Haze": 0.04, "Snow": 0.02, "Smoke": 0.01,
    }


def _default_weather_multipliers() -> Dict[str, float]:
    return {"Clear": 1.0, "Clouds": 1.0, "Rain": 0.96, "Thunderstorm": 0.92, "Others": 0.97}


def _default_dirty_rates() -> Dict[str, float]:
    return {"waiting_over_limit": 0.002, "boarding_over_limit": 0.0005, "treatment_stuck": 0.0002}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "default"
    start: str = "2021-01-01"
    end: str = "2022-12-31"
    seed: int = 7
    base_rate: float = 12.0
    trend_per_year: float = 0.05
    daily_amplitude: float = 0.35
    daily_peak_hour: int = 14
    weekly_amplitude: float = 0.10
    holiday_multiplier: float = 1.2
    game1_multiplier: float = 1.1
    game2_multiplier: float = 1.05
    weather_multipliers: Dict[str, float] = field(default_factory=_default_weather_multipliers)
    temperature_coefficient: float = 0.003
    waiting: DurationSpec = DurationSpec(1.5, 0.8)
    treatment: DurationSpec = DurationSpec(4.5, 0.6)
    boarding: DurationSpec = DurationSpec(9.6, 0.8)
    admission_probability: float = 0.25
    esi_mix: Dict[str, float] = field(default_factory=_default_esi_mix)
    esi_missing_rate: float = 0.02
    direct_admission_rate: float = 3.6
    length_of_stay: DurationSpec = DurationSpec(120.0, 0.9)
    dirty_rates: Dict[str, float] = field(default_factory=_default_dirty_rates)
    condition_probabilities: Dict[str, float] = field(default_factory=_default_conditions)
    condition_block_hours: int = 6
    temperature_mean_f: float = 58.0
    temperature_annual_amplitude: float = 20.0
    temperature_daily_amplitude: float = 8.0
    temperature_noise: float = 3.0
    game1_per_season: int = 12
    game2_per_season: int = 11

    def validate(self) -> None:
        try:
            start, end = pd.Timestamp(self.start), pd.Timestamp(self.end)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"Scenario {self.name}: bad date range: {e}") from e
        if end < start:
            raise ConfigError(f"Scenario {self.name}: end {self.end} before start {self.start}")
        if self.base_rate <= 0:
            raise ConfigError(f"Scenario {self.name}: base_rate must be positive")
        for label, spec in (("waiting", self.waiting), ("treatment", self.treatment),
                            ("boarding", self.boarding), ("length_of_stay", self.length_of_stay)):
            spec.validate(label)
        if not 0.0 <= self.admission_probability <= 1.0:
            raise ConfigError("admission_probability must be in [0, 1]")
        if not 0.0 <= self.esi_missing_rate < 1.0:
            raise ConfigError("esi_missing_rate must be in [0, 1)")
        for label, probs in (("esi_mix", self.esi_mix), ("condition_probabilities", self.condition_probabilities)):
            if any(p < 0 for p in probs.values()) or abs(sum(probs.values()) - 1.0) > 1e-9:
                raise ConfigError(f"{label} must be nonnegative and sum to 1")
        unknown = set(self.condition_probabilities) - set(RAW_WEATHER_CONDITIONS)
        if unknown:
            raise ConfigError(f"Unknown weather conditions: {sorted(unknown)}")
        unknown = set(self.weather_multipliers) - set(WEATHER_CATEGORIES)
        if unknown:
            raise ConfigError(f"Unknown weather categories: {sorted(unknown)}")
        if any(r < 0 for r in self.dirty_rates.values()):
            raise ConfigError("dirty_rates must be nonnegative")
        if abs(self.daily_amplitude) >= 1 or abs(self.weekly_amplitude) >= 1:
            raise ConfigError("Seasonal amplitudes must be below 1")
        if self.direct_admission_rate < 0 or self.condition_block_hours < 1:
            raise ConfigError("direct_admission_rate must be >= 0 and condition_block_hours >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioConfig":
        kwargs = dict(data)
        for key in ("waiting", "treatment", "boarding", "length_of_stay"):
            if isinstance(kwargs.get(key), dict):
                kwargs[key] = DurationSpec(float(kwargs[key]["mean_hours"]), float(kwargs[key]["cv"]))
        known = set(cls.__dataclass_fields__)
        extra = set(kwargs) - known
        if extra:
            raise ConfigError(f"Unknown scenario fields: {sorted(extra)}")
        scenario = cls(**kwargs)
        scenario.validate()
        return scenario

    def with_seed(self, seed: int) -> "ScenarioConfig":
        data = self.to_dict()
        data["seed"] = int(seed)
        return ScenarioConfig.from_dict(data)


def load_scenario(name_or_path: str) -> ScenarioConfig:
    """Load a shipped scenario by name (``default``) or a scenario JSON file."""
    candidate = Path(name_or_path)
    if not candidate.suffix:
        candidate = SCENARIO_DIR / f"{name_or_path}.json"
    if not candidate.exists():
        raise ConfigError(f"Scenario not found: {name_or_path}")
    with open(candidate, "r", encoding="utf-8-sig") as f:
        return ScenarioConfig.from_dict(json.load(f))
