from typing import Dict, Optional, Type

import numpy as np

from core.config import ModelConfig
from models.base import BlankModel
from models.classifier import SequenceClassifier
from models.labeler import SequenceLabeler
from models.params import ParameterStore

MODEL_CLASSES: Dict[str, Type[BlankModel]] = {
    SequenceLabeler.scheme: SequenceLabeler,
    SequenceClassifier.scheme: SequenceClassifier,
}


def build_model(config: ModelConfig, vocab_size: int, params: Optional[ParameterStore] = None,
                seed: Optional[int] = None, dtype=np.float64) -> BlankModel:
    return MODEL_CLASSES[config.scheme](config, vocab_size, params=params, seed=seed, dtype=dtype)
