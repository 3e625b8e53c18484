import io
import json
import zipfile
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from core.dataset.scaler import Scaler
from core.errors import ConfigError
from core.nbeatsx.config import NBeatsXConfig
from core.nbeatsx.model import NBeatsXModel

CHECKPOINT_VERSION = 1
# Fixed member timestamp keeps archive bytes identical across runs.
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _write_member(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def save_checkpoint(
    path: str,
    model: NBeatsXModel,
    scaler: Optional[Scaler] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> str:
    weights = model.named_parameters()
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "seed": model.config.seed,
        "n_features": model.n_features,
        "n_exo": model.n_exo,
        "scaler": scaler.to_dict() if scaler is not None else None,
        "weights": [{"name": name, "shape": list(value.shape)} for name, value in weights],
        "extra": extra or {},
    }
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(out, "w") as zf:
        _write_member(zf, "meta.json", json.dumps(meta, indent=2, sort_keys=True).encode("utf-8"))
        for name, value in weights:
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(value, dtype=np.float64), allow_pickle=False)
            _write_member(zf, f"weights/{name}.npy", buf.getvalue())
    return str(out)


def load_checkpoint(path: str) -> Tuple[NBeatsXModel, Optional[Scaler], Dict[str, Any]]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Checkpoint not found: {path}")
    try:
        with zipfile.ZipFile(p, "r") as zf:
            meta = json.loads(zf.read("meta.json").decode("utf-8"))
            if int(meta.get("version", 0)) != CHECKPOINT_VERSION:
                raise ConfigError(f"Unsupported checkpoint version: {meta.get('version')}")
            weights = {
                item["name"]: np.load(io.BytesIO(zf.read(f"weights/{item['name']}.npy")), allow_pickle=False)
                for item in meta["weights"]
            }
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as e:
        raise ConfigError(f"Checkpoint {path} is unreadable: {e}") from e
    config = NBeatsXConfig.from_dict(meta["config"])
    model = NBeatsXModel(config, int(meta["n_features"]), int(meta["n_exo"]))
    try:
        model.set_weights(weights)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"Checkpoint {path} does not fit its own config: {e}") from e
    scaler = Scaler.from_dict(meta["scaler"]) if meta.get("scaler") else None
    return model, scaler, meta
