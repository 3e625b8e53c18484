from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

from core.errors import ConfigError

STACK_TREND = "trend"
STACK_SEASONALITY = "seasonality"
STACK_EXOGENOUS = "exogenous"
STACK_KINDS = (STACK_TREND, STACK_SEASONALITY, STACK_EXOGENOUS)


@dataclass(frozen=True)
class StackSpec:
    kind: str
    blocks: int = 2
    layers_per_block: int = 3
    hidden_widths: Sequence[int] = (128, 128, 128)
    degree: int = 3
    harmonics: Optional[int] = None

    def validate(self) -> None:
        if self.kind not in STACK_KINDS:
            raise ConfigError(f"Unknown stack kind: {self.kind}")
        if self.blocks < 1 or self.layers_per_block < 1:
            raise ConfigError(f"{self.kind} stack needs at least one block and one layer")
        if len(self.hidden_widths) != self.layers_per_block:
            raise ConfigError(
                f"{self.kind} stack: {len(self.hidden_widths)} widths for {self.layers_per_block} layers"
            )
        if any(int(w) < 1 for w in self.hidden_widths):
            raise ConfigError(f"{self.kind} stack widths must be positive")
        if self.kind == STACK_TREND and self.degree < 0:
            raise ConfigError("Trend degree must be >= 0")
        if self.kind == STACK_SEASONALITY and self.harmonics is not None and self.harmonics < 1:
            raise ConfigError("Seasonality harmonics must be >= 1")

    def resolved_harmonics(self, horizon: int) -> int:
        return int(self.harmonics) if self.harmonics is not None else max(1, horizon // 2)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["hidden_widths"] = [int(w) for w in self.hidden_widths]
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StackSpec":
        widths = [int(w) for w in data.get("hidden_widths", [128, 128, 128])]
        harmonics = data.get("harmonics")
        return cls(
            kind=str(data.get("kind", "")).strip().lower(),
            blocks=int(data.get("blocks", 2)),
            layers_per_block=int(data.get("layers_per_block", len(widths))),
            hidden_widths=tuple(widths),
            degree=int(data.get("degree", 3)),
            harmonics=int(harmonics) if harmonics is not None else None,
        )


def default_stacks() -> List[StackSpec]:
    """Trend, seasonality and exogenous stacks, 2 blocks x 3 layers each."""
    return [
        StackSpec(STACK_TREND, hidden_widths=(128, 128, 128)),
        StackSpec(STACK_SEASONALITY, hidden_widths=(128, 128, 128)),
        StackSpec(STACK_EXOGENOUS, hidden_widths=(256, 256, 256)),
    ]


@dataclass(frozen=True)
class NBeatsXConfig:
    lookback: int = 12
    horizon: int = 6
    stacks: Sequence[StackSpec] = field(default_factory=default_stacks)
    learning_rate: float = 0.003
    dropout_p: float = 0.1
    batch_size: int = 128
    max_epochs: int = 30
    early_stop_patience: int = 5
    seed: int = 0

    def validate(self) -> None:
        if not self.stacks:
            raise ConfigError("At least one stack is required")
        if self.lookback < 1 or self.horizon < 1:
            raise ConfigError("lookback and horizon must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0, 1): {self.dropout_p}")
        if self.batch_size < 1 or self.max_epochs < 1 or self.early_stop_patience < 0:
            raise ConfigError("batch_size and max_epochs must be positive, patience nonnegative")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be nonnegative")
        for stack in self.stacks:
            stack.validate()

    def with_overrides(self, **changes: Any) -> "NBeatsXConfig":
        clean = {k: v for k, v in changes.items() if v is not None}
        cfg = replace(self, **clean)
        cfg.validate()
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lookback": self.lookback,
            "horizon": self.horizon,
            "stacks": [s.to_dict() for s in self.stacks],
            "learning_rate": self.learning_rate,
            "dropout_p": self.dropout_p,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "early_stop_patience": self.early_stop_patience,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NBeatsXConfig":
        base = cls()
        stacks = data.get("stacks")
        cfg = cls(
            lookback=int(data.get("lookback", base.lookback)),
            horizon=int(data.get("horizon", base.horizon)),
            stacks=[StackSpec.from_dict(s) for s in stacks] if stacks else default_stacks(),
            learning_rate=float(data.get("learning_rate", base.learning_rate)),
            dropout_p=float(data.get("dropout_p", base.dropout_p)),
            batch_size=int(data.get("batch_size", base.batch_size)),
            max_epochs=int(data.get("max_epochs", base.max_epochs)),
            early_stop_patience=int(data.get("early_stop_patience", base.early_stop_patience)),
            seed=int(data.get("seed", base.seed)),
        )
        cfg.validate()
        return cfg
