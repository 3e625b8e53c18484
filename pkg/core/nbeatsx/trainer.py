import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.dataset.windows import WindowSet
from core.errors import DataError, NonFiniteLossError, TrainingDivergedError
from core.nbeatsx.config import NBeatsXConfig
from core.nbeatsx.model import NBeatsXModel, forward_batch, loss_and_gradients
from core.nbeatsx.optim import AdamState, adam_step
from core.runlog import log

MIN_IMPROVEMENT = 1e-6


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: Optional[float]

    def to_dict(self) -> Dict:
        return {"epoch": self.epoch, "train_loss": self.train_loss, "val_loss": self.val_loss}


@dataclass
class TrainingHistory:
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_train_loss: float = float("inf")
    stopped_early: bool = False
    wall_seconds: float = 0.0

    def to_dicts(self) -> List[Dict]:
        return [e.to_dict() for e in self.epochs]

    def summary(self) -> Dict:
        last = self.epochs[-1] if self.epochs else None
        return {
            "epochs_run": len(self.epochs),
            "best_epoch": self.best_epoch,
            "best_train_loss": self.best_train_loss,
            "final_val_loss": last.val_loss if last else None,
            "stopped_early": self.stopped_early,
        }


def evaluation_loss(model: NBeatsXModel, windows: WindowSet, batch_size: int = 2048) -> Optional[float]:
    """Inference-mode MSE in model units; None for an empty set."""
    if len(windows) == 0:
        return None
    total = 0.0
    for start in range(0, len(windows), batch_size):
        chunk = windows.take(np.arange(start, min(start + batch_size, len(windows))))
        fp = forward_batch(model, chunk.history, chunk.inputs, chunk.exo_future, training=False)
        total += float(np.sum((fp.total - chunk.target) ** 2))
    return total / (len(windows) * windows.horizon)


def train(
    config: NBeatsXConfig,
    train_windows: WindowSet,
    val_windows: Optional[WindowSet] = None,
    verbose: bool = False,
) -> Tuple[NBeatsXModel, TrainingHistory]:
    """Mini-batch Adam with early stopping on the epoch training loss.

    Training ends once ``early_stop_patience`` + 1 consecutive epochs fail to
    beat the best loss by more than 1e-6; the best-epoch weights are restored.
    """
    config.validate()
    if len(train_windows) == 0:
        raise DataError("No training windows")
    if train_windows.lookback != config.lookback or train_windows.horizon != config.horizon:
        raise DataError(
            f"Windows are L={train_windows.lookback}, H={train_windows.horizon}; "
            f"config expects L={config.lookback}, H={config.horizon}"
        )
    started = time.perf_counter()
    model = NBeatsXModel(config, train_windows.n_features, train_windows.n_exo)
    # Separate stream from initialization so shuffling and dropout stay reproducible.
    rng = np.random.default_rng([config.seed, 1])
    params = model.named_parameters()
    state = AdamState()
    history = TrainingHistory()
    best_weights = model.get_weights()
    stale = 0
    n = len(train_windows)

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        weighted = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = train_windows.take(idx)
            try:
                loss, grads = loss_and_gradients(model, batch, training=True, rng=rng)
            except NonFiniteLossError as e:
                history.wall_seconds = time.perf_counter() - started
                raise TrainingDivergedError(
                    f"Training diverged in epoch {epoch}",
                    history=history.to_dicts(),
                    diagnostic=dict(e.diagnostic, epoch=epoch),
                ) from e
            adam_step(params, grads, state, config.learning_rate)
            weighted += loss * len(idx)
        train_loss = weighted / n
        val_loss = evaluation_loss(model, val_windows) if val_windows is not None else None
        history.epochs.append(EpochRecord(epoch, train_loss, val_loss))
        if verbose:
            val_text = f"{val_loss:.6f}" if val_loss is not None else "n/a"
            log(f"[Train] epoch {epoch}/{config.max_epochs} train={train_loss:.6f} val={val_text}")

        if train_loss < history.best_train_loss - MIN_IMPROVEMENT:
            history.best_train_loss = train_loss
            history.best_epoch = epoch
            best_weights = model.get_weights()
            stale = 0
        else:
            stale += 1
            if stale > config.early_stop_patience:
                history.stopped_early = True
                if verbose:
                    log(f"[Train] early stop at epoch {epoch}; best epoch {history.best_epoch}")
                break

    model.set_weights(best_weights)
    history.wall_seconds = time.perf_counter() - started
    return model, history
