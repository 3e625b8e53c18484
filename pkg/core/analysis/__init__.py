from .baseline import BASELINES, PERSISTENCE, SEASONAL_NAIVE, baseline_forecasts
from .decomposition import export_decomposition
from .extremes import extreme_slice_mae
from .metrics import MetricsReport, per_step_metrics, regression_metrics
from .report import evaluate_forecasts, write_report
from .thresholds import (
    CATEGORIES,
    ExtremeThresholds,
    category_counts,
    classify_extreme,
    compute_thresholds,
    thresholds_from_moments,
)
