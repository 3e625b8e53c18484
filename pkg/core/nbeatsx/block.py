from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.errors import DataError
from core.nbeatsx.basis import BasisPair, seasonality_basis, trend_basis
from core.nbeatsx.config import STACK_EXOGENOUS, STACK_SEASONALITY, STACK_TREND, StackSpec


@dataclass
class BlockCache:
    x: np.ndarray
    layers: List[Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]] = field(default_factory=list)
    hidden: Optional[np.ndarray] = None
    exo_future: Optional[np.ndarray] = None


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class NBeatsXBlock:
    """Fully connected encoder producing basis coefficients for one block.

    Input rows are [residual (L) | lookback covariates (L*F) | future exogenous (H*Fx)].
    Trend and seasonality blocks expand theta on fixed bases. The exogenous
    block uses theta_b as the backcast directly and weights the future
    exogenous regressors with theta_f.
    """

    def __init__(
        self,
        spec: StackSpec,
        lookback: int,
        horizon: int,
        n_features: int,
        n_exo: int,
        dropout_p: float,
        rng: np.random.Generator,
    ) -> None:
        self.kind = spec.kind
        self.lookback = lookback
        self.horizon = horizon
        self.n_features = n_features
        self.n_exo = n_exo
        self.dropout_p = float(dropout_p)
        self.basis: Optional[BasisPair] = None
        if spec.kind == STACK_TREND:
            self.basis = trend_basis(spec.degree, lookback, horizon)
            self.n_theta_b = self.n_theta_f = self.basis.size
        elif spec.kind == STACK_SEASONALITY:
            self.basis = seasonality_basis(spec.resolved_harmonics(horizon), lookback, horizon)
            self.n_theta_b = self.n_theta_f = self.basis.size
        elif spec.kind == STACK_EXOGENOUS:
            self.n_theta_b = lookback
            self.n_theta_f = n_exo
        else:
            raise DataError(f"Unknown stack kind: {spec.kind}")

        self.input_size = lookback + lookback * n_features + horizon * n_exo
        self.n_layers = len(spec.hidden_widths)
        self.params: Dict[str, np.ndarray] = {}
        fan_in = self.input_size
        for i, width in enumerate(spec.hidden_widths):
            self.params[f"fc{i}.W"] = glorot_uniform(rng, fan_in, int(width))
            self.params[f"fc{i}.b"] = np.zeros(int(width))
            fan_in = int(width)
        self.params["theta.W"] = glorot_uniform(rng, fan_in, self.n_theta_b + self.n_theta_f)

    def build_input(self, residual: np.ndarray, covariates: np.ndarray, exo_future: np.ndarray) -> np.ndarray:
        b = residual.shape[0]
        if residual.shape[1] != self.lookback:
            raise DataError(f"Residual has width {residual.shape[1]}, block expects {self.lookback}")
        x = np.concatenate(
            [residual, covariates.reshape(b, -1), exo_future.reshape(b, -1)], axis=1
        )
        if x.shape[1] != self.input_size:
            raise DataError(f"Block input has width {x.shape[1]}, expected {self.input_size}")
        return x

    def forward(
        self,
        residual: np.ndarray,
        covariates: np.ndarray,
        exo_future: np.ndarray,
        training: bool = False,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[np.ndarray, np.ndarray, BlockCache]:
        x = self.build_input(residual, covariates, exo_future)
        cache = BlockCache(x=x, exo_future=exo_future)
        a = x
        keep = 1.0 - self.dropout_p
        for i in range(self.n_layers):
            z = a @ self.params[f"fc{i}.W"] + self.params[f"fc{i}.b"]
            h = np.maximum(z, 0.0)
            mask = None
            if training and self.dropout_p > 0.0:
                if rng is None:
                    raise DataError("Dropout in training mode needs a random generator")
                mask = (rng.random(h.shape) < keep) / keep
                h = h * mask
            cache.layers.append((a, z, mask))
            a = h
        cache.hidden = a
        theta = a @ self.params["theta.W"]
        theta_b = theta[:, : self.n_theta_b]
        theta_f = theta[:, self.n_theta_b:]
        if self.basis is not None:
            backcast = theta_b @ self.basis.backcast
            forecast = theta_f @ self.basis.forecast
        else:
            backcast = theta_b
            forecast = np.einsum("bj,bhj->bh", theta_f, exo_future.reshape(x.shape[0], self.horizon, self.n_exo))
        return backcast, forecast, cache

    def backward(
        self, d_backcast: np.ndarray, d_forecast: np.ndarray, cache: BlockCache
    ) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """Gradients of the block parameters and of the block input."""
        b = d_backcast.shape[0]
        if self.basis is not None:
            d_theta_b = d_backcast @ self.basis.backcast.T
            d_theta_f = d_forecast @ self.basis.forecast.T
        else:
            d_theta_b = d_backcast
            exo = cache.exo_future.reshape(b, self.horizon, self.n_exo)
            d_theta_f = np.einsum("bh,bhj->bj", d_forecast, exo)
        d_theta = np.concatenate([d_theta_b, d_theta_f], axis=1)
        grads: Dict[str, np.ndarray] = {"theta.W": cache.hidden.T @ d_theta}
        d_a = d_theta @ self.params["theta.W"].T
        for i in reversed(range(self.n_layers)):
            a_prev, z, mask = cache.layers[i]
            if mask is not None:
                d_a = d_a * mask
            d_z = d_a * (z > 0.0)
            grads[f"fc{i}.W"] = a_prev.T @ d_z
            grads[f"fc{i}.b"] = d_z.sum(axis=0)
            d_a = d_z @ self.params[f"fc{i}.W"].T
        return d_a, grads


def block_forward(
    block: NBeatsXBlock,
    residual: np.ndarray,
    covariates: np.ndarray,
    exo_future: np.ndarray,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, np.ndarray, BlockCache]:
    return block.forward(residual, covariates, exo_future, training=training, rng=rng)
