import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.errors import ConfigError, DataError
from core.features.assemble import CALENDAR_COLUMNS
from core.preprocess.transforms import ALIGN_CENTERED, ALIGN_TRAILING, WEATHER_ONE_HOT_COLUMNS

TRANSFORM_RAW = "raw"
TRANSFORM_LAGS = "lags"
TRANSFORM_ROLLING = "rolling"
TRANSFORMS = (TRANSFORM_RAW, TRANSFORM_LAGS, TRANSFORM_ROLLING)

# Named groups expand to several hourly columns.
FEATURE_GROUPS: Dict[str, List[str]] = {
    "calendar": list(CALENDAR_COLUMNS),
    "weather_status": list(WEATHER_ONE_HOT_COLUMNS),
    "boarding_count_by_esi": ["boarding_count_esi12", "boarding_count_esi3", "boarding_count_esi45"],
    "waiting_count_by_esi": ["waiting_count_esi12", "waiting_count_esi3", "waiting_count_esi45"],
}

MANIFEST_DIR = Path(__file__).resolve().parents[1] / "manifests"
SHIPPED_VARIANTS = ("DS1", "DS2", "DS3", "DS4", "DS5")


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    transform: str = TRANSFORM_RAW
    window: Optional[int] = None
    alignment: Optional[str] = None

    @classmethod
    def from_dict(cls, item: Dict[str, Any]) -> "FeatureEntry":
        if not isinstance(item, dict) or not str(item.get("name", "")).strip():
            raise ConfigError(f"Manifest entry needs a name: {item!r}")
        window = item.get("window")
        return cls(
            name=str(item["name"]).strip(),
            transform=str(item.get("transform", TRANSFORM_RAW)).strip().lower(),
            window=int(window) if window is not None else None,
            alignment=(str(item["alignment"]).strip().lower() if item.get("alignment") else None),
        )

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"name": self.name, "transform": self.transform}
        if self.window is not None:
            out["window"] = self.window
        if self.alignment:
            out["alignment"] = self.alignment
        return out

    def columns(self) -> List[str]:
        return list(FEATURE_GROUPS.get(self.name, [self.name]))

    def validate(self) -> None:
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"Unknown transform {self.transform!r} for {self.name}")
        if self.transform == TRANSFORM_LAGS and (self.window is None or self.window < 1):
            raise ConfigError(f"Lag entry {self.name} needs window >= 1")
        if self.transform == TRANSFORM_ROLLING and (self.window is None or self.window < 2):
            raise ConfigError(f"Rolling entry {self.name} needs window >= 2")
        if self.alignment and self.alignment not in (ALIGN_CENTERED, ALIGN_TRAILING):
            raise ConfigError(f"Unknown rolling alignment {self.alignment!r} for {self.name}")


@dataclass
class FeatureManifest:
    variant: str
    entries: List[FeatureEntry] = field(default_factory=list)
    target: str = "boarding_count"
    description: str = ""

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FeatureManifest":
        entries = [FeatureEntry.from_dict(item) for item in data.get("features", []) or []]
        manifest = cls(
            variant=str(data.get("variant", "custom")),
            entries=entries,
            target=str(data.get("target", "boarding_count")),
            description=str(data.get("description", "")),
        )
        manifest.validate()
        return manifest

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "description": self.description,
            "target": self.target,
            "features": [e.to_dict() for e in self.entries],
        }

    def validate(self) -> None:
        if not self.entries:
            raise ConfigError(f"Manifest {self.variant} lists no features")
        for entry in self.entries:
            entry.validate()

    def check_columns(self, available: List[str]) -> None:
        have = set(available)
        for entry in self.entries:
            for col in entry.columns():
                if col not in have:
                    raise DataError(f"Unknown feature in manifest {self.variant}: {col}", detail={"feature": col})
        if self.target not in have:
            raise DataError(f"Target column missing: {self.target}", detail={"feature": self.target})


def load_manifest(name_or_path: str, manifest_dir: Optional[str] = None) -> FeatureManifest:
    """Load a shipped variant by id (``DS3``) or a manifest JSON file by path."""
    candidate = Path(name_or_path)
    if not candidate.suffix:
        candidate = Path(manifest_dir or MANIFEST_DIR) / f"{name_or_path.upper()}.json"
    if not candidate.exists():
        raise ConfigError(f"Manifest not found: {name_or_path}")
    try:
        with open(candidate, "r", encoding="utf-8-sig") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Manifest {candidate} is not valid JSON: {e}") from e
    return FeatureManifest.from_dict(data)
