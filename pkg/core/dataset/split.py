import math
from typing import Tuple

from core.dataset.variant import VariantMatrix
from core.errors import ConfigError, DataError

DEFAULT_FRACTIONS = (0.70, 0.15, 0.15)


def split_sizes(n: int, train: float = 0.70, val: float = 0.15, test: float = 0.15) -> Tuple[int, int, int]:
    """floor(train*n), floor(val*n), and the remainder for test."""
    fractions = (float(train), float(val), float(test))
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"Split fractions must be nonnegative and sum to 1: {fractions}")
    n_train = int(math.floor(fractions[0] * n + 1e-9))
    n_val = int(math.floor(fractions[1] * n + 1e-9))
    return n_train, n_val, n - n_train - n_val


def chronological_split(
    matrix: VariantMatrix,
    train: float = 0.70,
    val: float = 0.15,
    test: float = 0.15,
    min_rows: int = 0,
) -> Tuple[VariantMatrix, VariantMatrix, VariantMatrix]:
    n = len(matrix)
    n_train, n_val, n_test = split_sizes(n, train, val, test)
    if min_rows and min(n_train, n_val, n_test) < min_rows:
        raise DataError(
            f"Too few rows for a {train}/{val}/{test} split: {n} rows, each segment needs {min_rows}",
            detail={"rows": n, "min_rows": min_rows},
        )
    return (
        matrix.slice(0, n_train),
        matrix.slice(n_train, n_train + n_val),
        matrix.slice(n_train + n_val, n),
    )
