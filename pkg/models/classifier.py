# models/classifier.py
"""
Blanking as sequence classification over a variable-size dictionary:
the encoder states are scored against a pooled summary of the sentence and
softmaxed over positions, pointer-network style.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.errors import TargetRangeError
from core.nn import AttentionParams, attend, pool
from core.numcore import Tensor, as_tensor, log, neg, pick
from models.base import BlankModel, reduce_sentences

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassifierOutput:
    """Distribution over the L positions, shape (..., L)."""

    distribution: Tensor

    @property
    def probabilities(self) -> np.ndarray:
        return self.distribution.data


class SequenceClassifier(BlankModel):
    scheme = "classification"

    def declare_head(self, store) -> None:
        width = 2 * self.config.hidden_dim
        attn_dim = self.config.resolved_attention_dim
        store.add("attention.w", (attn_dim, 2 * width))
        store.add("attention.v", (attn_dim,))

    def attention(self) -> AttentionParams:
        return AttentionParams(w=self.params.tensor("attention.w"), v=self.params.tensor("attention.v"))

    def forward(self, tokens, training: bool = False, rng: Optional[np.random.Generator] = None) -> ClassifierOutput:
        ids = self.check_ids(tokens)
        encoded = self.encode(ids, training, rng)
        summary = pool(encoded, self.config.pooling)
        return ClassifierOutput(attend(encoded, summary, self.attention(), self.config.attention_activation))

    def loss(self, tokens, blanks, training: bool = False, rng: Optional[np.random.Generator] = None,
             reduction: str = "mean") -> Tensor:
        return classify_loss(self.forward(tokens, training, rng), blanks, reduction)

    def blank_scores(self, tokens) -> np.ndarray:
        return self.forward(tokens).probabilities


def classify_forward(tokens, model: SequenceClassifier, training: bool = False,
                     rng: Optional[np.random.Generator] = None) -> ClassifierOutput:
    return model.forward(tokens, training, rng)


def classify_loss(output: ClassifierOutput, gold, reduction: str = "mean") -> Tensor:
    """Negative log-likelihood of the gold position, mean over sentences."""
    distribution = as_tensor(output.distribution)
    gold = np.asarray(gold, dtype=np.int64)
    length = distribution.shape[-1]
    if gold.shape != distribution.shape[:-1] or (gold < 0).any() or (gold >= length).any():
        raise TargetRangeError(f"gold position {gold.tolist()} outside [0, {length})")
    return reduce_sentences(neg(log(pick(distribution, gold))), reduction)
