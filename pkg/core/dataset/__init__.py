from .manifest import FEATURE_GROUPS, FeatureEntry, FeatureManifest, load_manifest
from .prepare import PreparedDataset, prepare_dataset
from .scaler import Scaler, apply_scaler, fit_scaler
from .split import chronological_split, split_sizes
from .variant import KNOWN_FUTURE_COLUMNS, ColumnInfo, VariantMatrix, build_variant
from .windows import SupervisedWindow, WindowSet, make_windows
