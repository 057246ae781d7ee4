import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator

load_dotenv()


class Settings:
    DATA_DIR: str = os.getenv("CLOZEGEN_DATA_DIR", "artifacts")
    LOG_LEVEL: str = os.getenv("CLOZEGEN_LOG_LEVEL", "INFO")
    NO_COLOR: bool = bool(os.getenv("CLOZEGEN_NO_COLOR"))


settings = Settings()

Scheme = Literal["labeling", "classification"]
Pooling = Literal["max", "mean", "last"]
TeacherRule = Literal["rarest", "rarest-content", "marker-adjacent"]

# default epochs per scheme
DEFAULT_EPOCHS = {"labeling": 10, "classification": 5}


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scheme: Scheme = "labeling"
    embed_dim: int = Field(300, gt=0)
    hidden_dim: int = Field(300, gt=0)
    num_layers: int = Field(2, ge=1)
    dropout: float = Field(0.2, ge=0.0, lt=1.0)
    pooling: Pooling = "last"
    attention_dim: Optional[int] = Field(None, gt=0)
    attention_activation: Literal["linear", "tanh"] = "linear"
    init_scale: float = Field(0.08, gt=0.0)
    forget_bias: float = 1.0

    @property
    def resolved_attention_dim(self) -> int:
        return self.attention_dim or 2 * self.hidden_dim


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(0.001, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    clip_norm: float = Field(5.0, gt=0.0)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    epochs: Optional[int] = Field(None, ge=1)
    batch_size: int = Field(32, ge=1)
    eval_every: int = Field(1, ge=1)
    seed: int = 13
    threshold: float = Field(0.5, ge=0.0, le=1.0)
    dtype: Literal["float64", "float32"] = "float64"
    checkpoint_path: Optional[str] = None
    metrics_path: Optional[str] = None

    @model_validator(mode="after")
    def _default_epochs(self) -> "TrainConfig":
        if self.epochs is None:
            self.epochs = DEFAULT_EPOCHS[self.model.scheme]
        return self

    @property
    def scheme(self) -> str:
        return self.model.scheme


class TeacherConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vocab_size: int = Field(300, ge=10)
    min_length: int = Field(5, ge=2)
    max_length: int = Field(15, ge=2)
    count: int = Field(5000, ge=1)
    zipf_exponent: float = Field(1.1, gt=0.0)
    rule: TeacherRule = "rarest"
    seed: int = 7
    stop_words: Optional[List[str]] = None
    stop_list_size: int = Field(10, ge=0)
    marker_token: str = "zz"
    marker_rate: float = Field(0.5, ge=0.0, le=1.0)
    blanks_per_sentence: int = Field(1, ge=1)
    lexicon_path: Optional[str] = None

    @model_validator(mode="after")
    def _check_lengths(self) -> "TeacherConfig":
        if self.max_length < self.min_length:
            raise ValueError(f"max_length {self.max_length} < min_length {self.min_length}")
        if self.blanks_per_sentence > self.min_length:
            raise ValueError("blanks_per_sentence cannot exceed min_length")
        return self


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def _set_dotted(target: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    for key in keys[:-1]:
        target = target.setdefault(key, {})
    target[keys[-1]] = value


def load_config(cls: Type[ConfigT], path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ConfigT:
    """
    Build a config from an optional JSON file, then apply dotted-key
    overrides (``{"model.hidden_dim": 64}``) and validate the result.
    None-valued overrides are ignored so unset CLI flags never clobber the file.
    """
    raw: Dict[str, Any] = {}
    if path:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    for dotted, value in sorted((overrides or {}).items()):
        if value is not None:
            _set_dotted(raw, dotted, value)
    return cls.model_validate(raw)
