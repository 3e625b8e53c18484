from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import pandas as pd

from core.dataset.manifest import FeatureManifest
from core.dataset.scaler import Scaler, fit_scaler
from core.dataset.split import DEFAULT_FRACTIONS, chronological_split
from core.dataset.variant import VariantMatrix, build_variant
from core.dataset.windows import WindowSet, make_windows
from core.errors import DataError
from core.preprocess.transforms import ALIGN_CENTERED
from core.runlog import log

SEGMENTS = ("train", "val", "test")


@dataclass
class PreparedDataset:
    matrix: VariantMatrix
    segments: Dict[str, VariantMatrix]
    scaled: Dict[str, VariantMatrix]
    scaler: Scaler
    horizon: int
    _windows: Dict[int, Dict[str, WindowSet]] = field(default_factory=dict, repr=False)

    @property
    def variant(self) -> str:
        return self.matrix.variant

    def windows(self, lookback: int) -> Dict[str, WindowSet]:
        """Windows per segment for ``lookback``, cached per lookback length."""
        if lookback not in self._windows:
            self._windows[lookback] = {
                name: make_windows(self.scaled[name], lookback, self.horizon, self.scaler) for name in SEGMENTS
            }
        return self._windows[lookback]

    def summary(self) -> Dict:
        return {
            "variant": self.variant,
            "columns": len(self.matrix.columns),
            "known_future_columns": self.matrix.known_future_columns(),
            "rows": {name: len(seg) for name, seg in self.segments.items()},
            "ranges": {
                name: [str(seg.hours.min()), str(seg.hours.max())] if len(seg) else [] for name, seg in self.segments.items()
            },
        }


def prepare_dataset(
    table: pd.DataFrame,
    manifest: FeatureManifest,
    horizon: int = 6,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    rolling_alignment: str = ALIGN_CENTERED,
    min_rows: int = 0,
    verbose: bool = False,
) -> PreparedDataset:
    """Variant matrix, chronological split, train-fitted scaler, scaled segments."""
    matrix = build_variant(table, manifest, rolling_alignment=rolling_alignment, verbose=verbose)
    if len(matrix) == 0:
        raise DataError(f"Variant {manifest.variant} has no rows after warmup removal")
    train, val, test = chronological_split(matrix, *fractions, min_rows=min_rows)
    scaler = fit_scaler(train)
    segments = {"train": train, "val": val, "test": test}
    scaled = {name: scaler.transform(seg) for name, seg in segments.items()}
    if verbose:
        log(f"[Dataset] split train={len(train)} val={len(val)} test={len(test)}; scaled columns={len(scaler.scaled_columns)}")
    return PreparedDataset(matrix=matrix, segments=segments, scaled=scaled, scaler=scaler, horizon=horizon)
