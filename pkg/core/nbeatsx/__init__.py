from .basis import BasisPair, seasonality_basis, trend_basis
from .block import NBeatsXBlock, block_forward
from .checkpoint import load_checkpoint, save_checkpoint
from .config import NBeatsXConfig, StackSpec, default_stacks
from .model import (
    ForecastBatch,
    ForecastDecomposition,
    NBeatsXModel,
    loss_and_gradients,
    model_forward,
    parameter_count,
    predict_arrays,
    predict_series,
)
from .optim import AdamState, adam_step
from .trainer import TrainingHistory, train
