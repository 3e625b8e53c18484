from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from core.dataset.scaler import Scaler
from core.dataset.windows import SupervisedWindow, WindowSet
from core.errors import NonFiniteLossError
from core.nbeatsx.block import BlockCache, NBeatsXBlock
from core.nbeatsx.config import STACK_EXOGENOUS, STACK_SEASONALITY, STACK_TREND, NBeatsXConfig


@dataclass
class ForecastDecomposition:
    total: np.ndarray
    trend: np.ndarray
    seasonality: np.ndarray
    exogenous: np.ndarray
    anchor: Optional[pd.Timestamp] = None


@dataclass
class ForwardPass:
    total: np.ndarray
    components: Dict[str, np.ndarray]
    residual: np.ndarray
    backcasts: List[np.ndarray] = field(default_factory=list)
    caches: List[BlockCache] = field(default_factory=list)


@dataclass
class ForecastBatch:
    """Stacked decompositions, one row per anchor."""

    total: np.ndarray
    trend: np.ndarray
    seasonality: np.ndarray
    exogenous: np.ndarray
    anchors: pd.DatetimeIndex

    def __len__(self) -> int:
        return len(self.anchors)

    def at(self, i: int) -> ForecastDecomposition:
        return ForecastDecomposition(
            total=self.total[i],
            trend=self.trend[i],
            seasonality=self.seasonality[i],
            exogenous=self.exogenous[i],
            anchor=self.anchors[i],
        )


class NBeatsXModel:
    def __init__(self, config: NBeatsXConfig, n_features: int, n_exo: int) -> None:
        config.validate()
        self.config = config
        self.n_features = int(n_features)
        self.n_exo = int(n_exo)
        rng = np.random.default_rng(config.seed)
        self.blocks: List[Tuple[str, NBeatsXBlock]] = []
        for si, stack in enumerate(config.stacks):
            for bi in range(stack.blocks):
                block = NBeatsXBlock(
                    stack, config.lookback, config.horizon, self.n_features, self.n_exo, config.dropout_p, rng
                )
                self.blocks.append((f"s{si}.b{bi}", block))

    def named_parameters(self) -> List[Tuple[str, np.ndarray]]:
        out = []
        for prefix, block in self.blocks:
            for key, value in block.params.items():
                out.append((f"{prefix}.{key}", value))
        return out

    def get_weights(self) -> Dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.named_parameters()}

    def set_weights(self, weights: Dict[str, np.ndarray]) -> None:
        for prefix, block in self.blocks:
            for key in block.params:
                name = f"{prefix}.{key}"
                if weights[name].shape != block.params[key].shape:
                    raise ValueError(f"Shape mismatch for {name}: {weights[name].shape} vs {block.params[key].shape}")
                block.params[key][...] = weights[name]

    def parameter_count(self) -> Dict[str, int]:
        counts = {name: int(value.size) for name, value in self.named_parameters()}
        counts["total"] = sum(counts.values())
        return counts


def parameter_count(model: NBeatsXModel) -> Dict[str, int]:
    return model.parameter_count()


def forward_batch(
    model: NBeatsXModel,
    history: np.ndarray,
    covariates: np.ndarray,
    exo_future: np.ndarray,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> ForwardPass:
    """Doubly residual pass: each block reads the running residual and subtracts its backcast."""
    b = history.shape[0]
    horizon = model.config.horizon
    components = {kind: np.zeros((b, horizon)) for kind in (STACK_TREND, STACK_SEASONALITY, STACK_EXOGENOUS)}
    residual = np.array(history, dtype=np.float64, copy=True)
    fp = ForwardPass(total=np.zeros((b, horizon)), components=components, residual=residual)
    for _, block in model.blocks:
        backcast, forecast, cache = block.forward(residual, covariates, exo_future, training=training, rng=rng)
        residual = residual - backcast
        components[block.kind] = components[block.kind] + forecast
        fp.backcasts.append(backcast)
        fp.caches.append(cache)
    fp.residual = residual
    fp.total = components[STACK_TREND] + components[STACK_SEASONALITY] + components[STACK_EXOGENOUS]
    return fp


def model_forward(
    model: NBeatsXModel,
    window: Union[SupervisedWindow, WindowSet],
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[Union[ForecastDecomposition, ForecastBatch], ForwardPass]:
    """Decomposed forecast in model units for one window or a stacked set."""
    single = isinstance(window, SupervisedWindow)
    if single:
        fp = forward_batch(
            model, window.history[None, :], window.inputs[None, :, :], window.exo_future[None, :, :], training, rng
        )
        c = fp.components
        return ForecastDecomposition(
            total=fp.total[0],
            trend=c[STACK_TREND][0],
            seasonality=c[STACK_SEASONALITY][0],
            exogenous=c[STACK_EXOGENOUS][0],
            anchor=window.anchor,
        ), fp
    fp = forward_batch(model, window.history, window.inputs, window.exo_future, training, rng)
    c = fp.components
    return ForecastBatch(
        total=fp.total,
        trend=c[STACK_TREND],
        seasonality=c[STACK_SEASONALITY],
        exogenous=c[STACK_EXOGENOUS],
        anchors=window.anchors,
    ), fp


def loss_and_gradients(
    model: NBeatsXModel,
    batch: WindowSet,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Mean squared error over all horizon steps and items, with reverse-mode gradients."""
    if len(batch) == 0:
        raise ValueError("Empty batch")
    fp = forward_batch(model, batch.history, batch.inputs, batch.exo_future, training, rng)
    diff = fp.total - batch.target
    loss = float(np.mean(diff * diff))
    if not np.isfinite(loss):
        raise NonFiniteLossError(
            "Loss is not finite",
            diagnostic={
                "batch_size": int(len(batch)),
                "max_abs_prediction": float(np.nanmax(np.abs(fp.total))) if np.isfinite(fp.total).any() else None,
                "non_finite_predictions": int((~np.isfinite(fp.total)).sum()),
            },
        )
    d_total = 2.0 * diff / diff.size
    lookback = model.config.lookback
    grads: Dict[str, np.ndarray] = {}
    # Gradient reaching the residual after each block; the final residual feeds nothing.
    g_residual = np.zeros_like(batch.history, dtype=np.float64)
    for (prefix, block), cache in zip(reversed(model.blocks), reversed(fp.caches)):
        d_x, block_grads = block.backward(-g_residual, d_total, cache)
        g_residual = g_residual + d_x[:, :lookback]
        for key, value in block_grads.items():
            grads[f"{prefix}.{key}"] = value
    return loss, grads


def predict_arrays(
    model: NBeatsXModel,
    windows: WindowSet,
    scaler: Optional[Scaler] = None,
    batch_size: int = 2048,
) -> ForecastBatch:
    """Inference-mode forecasts; with a scaler, outputs are in raw patient counts."""
    h = model.config.horizon
    parts = {k: [] for k in ("trend", "seasonality", "exogenous")}
    for start in range(0, len(windows), batch_size):
        chunk = windows.take(np.arange(start, min(start + batch_size, len(windows))))
        fp = forward_batch(model, chunk.history, chunk.inputs, chunk.exo_future, training=False)
        parts["trend"].append(fp.components[STACK_TREND])
        parts["seasonality"].append(fp.components[STACK_SEASONALITY])
        parts["exogenous"].append(fp.components[STACK_EXOGENOUS])
    trend, seasonality, exogenous = (
        np.concatenate(parts[k]) if parts[k] else np.zeros((0, h)) for k in ("trend", "seasonality", "exogenous")
    )
    if scaler is not None:
        # The level shift belongs to the trend; the other components only rescale.
        trend = trend * scaler.target_std + scaler.target_mean
        seasonality = seasonality * scaler.target_std
        exogenous = exogenous * scaler.target_std
    total = trend + seasonality + exogenous
    return ForecastBatch(total=total, trend=trend, seasonality=seasonality, exogenous=exogenous, anchors=windows.anchors)


def predict_series(
    model: NBeatsXModel, windows: WindowSet, scaler: Optional[Scaler] = None
) -> List[ForecastDecomposition]:
    batch = predict_arrays(model, windows, scaler)
    return [batch.at(i) for i in range(len(batch))]
