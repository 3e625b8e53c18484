import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from core.dataset.manifest import TRANSFORM_LAGS, TRANSFORM_RAW, TRANSFORM_ROLLING, FeatureManifest
from core.errors import DataError
from core.features.assemble import BINARY_COLUMNS, CALENDAR_COLUMNS
from core.preprocess.transforms import (
    ALIGN_CENTERED,
    WARMUP_COLUMN,
    WEATHER_ONE_HOT_COLUMNS,
    LagSpec,
    add_lags,
    add_rolling_mean,
    lag_column,
    one_hot_weather,
    rolling_column,
)
from core.runlog import log

# Covariates whose future values are known when the forecast is issued.
KNOWN_FUTURE_COLUMNS = tuple(CALENDAR_COLUMNS) + ("holiday", "game1", "game2")


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    source: str
    transform: str
    binary: bool = False
    known_future: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "source": self.source,
            "transform": self.transform,
            "binary": self.binary,
            "known_future": self.known_future,
        }


@dataclass
class VariantMatrix:
    """Feature rows of one dataset variant with the raw target alongside."""

    variant: str
    hours: pd.DatetimeIndex
    features: pd.DataFrame
    target: np.ndarray
    catalog: List[ColumnInfo] = field(default_factory=list)
    target_name: str = "boarding_count"

    def __len__(self) -> int:
        return len(self.hours)

    @property
    def columns(self) -> List[str]:
        return [c.name for c in self.catalog]

    def known_future_columns(self) -> List[str]:
        return [c.name for c in self.catalog if c.known_future]

    def slice(self, start: int, stop: int) -> "VariantMatrix":
        return replace(
            self,
            hours=self.hours[start:stop],
            features=self.features.iloc[start:stop],
            target=self.target[start:stop],
        )

    def to_frame(self) -> pd.DataFrame:
        frame = self.features.copy()
        frame[self.target_name] = self.target
        frame.index = self.hours
        frame.index.name = "hour"
        return frame

    def export(self, out_dir: str) -> Dict[str, str]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        matrix_path = out / "matrix.csv"
        catalog_path = out / "catalog.json"
        self.to_frame().to_csv(
            matrix_path, date_format="%Y-%m-%d %H:%M:%S", lineterminator="\n", float_format="%.10g"
        )
        catalog = {
            "variant": self.variant,
            "target": self.target_name,
            "rows": len(self),
            "columns": [c.to_dict() for c in self.catalog],
        }
        with open(catalog_path, "w", encoding="utf-8") as f:
            json.dump(catalog, f, ensure_ascii=False, indent=2)
        return {"matrix": str(matrix_path), "catalog": str(catalog_path)}


def _is_binary(source: str) -> bool:
    return source in BINARY_COLUMNS or source in WEATHER_ONE_HOT_COLUMNS


def build_variant(
    table: pd.DataFrame,
    manifest: FeatureManifest,
    rolling_alignment: str = ALIGN_CENTERED,
    verbose: bool = False,
) -> VariantMatrix:
    """Expand ``manifest`` against the hourly table; warmup rows are dropped."""
    manifest.validate()
    work = table.drop(columns=[WARMUP_COLUMN], errors="ignore").copy()
    work.attrs = dict(table.attrs)
    if "weather_status" in work.columns:
        work = work.join(one_hot_weather(work["weather_status"]))
    manifest.check_columns(list(work.columns))

    catalog: List[ColumnInfo] = []
    seen = set()

    def _add(name: str, source: str, transform: str) -> None:
        if name in seen:
            return
        seen.add(name)
        catalog.append(ColumnInfo(
            name=name,
            source=source,
            transform=transform,
            binary=_is_binary(source),
            known_future=transform == TRANSFORM_RAW and source in KNOWN_FUTURE_COLUMNS,
        ))

    for entry in manifest.entries:
        for col in entry.columns():
            if entry.transform == TRANSFORM_RAW:
                _add(col, col, TRANSFORM_RAW)
            elif entry.transform == TRANSFORM_LAGS:
                if lag_column(col, entry.window) not in work.columns:
                    work = add_lags(work, LagSpec(col, lags=int(entry.window)))
                for k in range(1, int(entry.window) + 1):
                    _add(lag_column(col, k), col, TRANSFORM_LAGS)
            elif entry.transform == TRANSFORM_ROLLING:
                name = rolling_column(col, int(entry.window))
                if name not in work.columns:
                    spec = LagSpec(col, lags=1, rolling_window=int(entry.window), alignment=entry.alignment or rolling_alignment)
                    work = add_rolling_mean(work, spec)
                _add(name, col, TRANSFORM_ROLLING)

    if WARMUP_COLUMN in work.columns:
        keep = ~work[WARMUP_COLUMN].astype(bool).to_numpy()
        dropped = int((~keep).sum())
        work = work.loc[keep]
    else:
        dropped = 0

    names = [c.name for c in catalog]
    features = work[names].astype(np.float64)
    bad = [c for c in names if not np.isfinite(features[c].to_numpy()).all()]
    if bad:
        raise DataError(f"Non-finite values in feature columns: {', '.join(bad[:5])}", detail={"columns": bad})
    target = work[manifest.target].astype(np.float64).to_numpy()
    if not np.isfinite(target).all():
        raise DataError(f"Non-finite values in target column {manifest.target}")
    if verbose:
        log(f"[Dataset] {manifest.variant}: {len(names)} columns, {len(work)} rows ({dropped} warmup rows dropped)")
    return VariantMatrix(
        variant=manifest.variant,
        hours=pd.DatetimeIndex(work.index, name="hour"),
        features=features.reset_index(drop=True),
        target=target,
        catalog=catalog,
        target_name=manifest.target,
    )
