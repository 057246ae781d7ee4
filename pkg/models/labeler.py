# models/labeler.py
"""
Blanking as sequence labeling: every token gets a blank / not-blank
decision from its concatenated forward and backward states.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.errors import CorpusError, TargetRangeError
from core.numcore import Tensor, as_tensor, linear, log, neg, pick, reduce_mean, softmax, stack
from models.base import BlankModel, reduce_sentences

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabelerOutput:
    """2-class distribution per token, shape (..., L, 2); class 1 means "blank"."""

    distribution: Tensor

    @property
    def positive(self) -> np.ndarray:
        return self.distribution.data[..., 1]

    @classmethod
    def from_positive(cls, positive) -> "LabelerOutput":
        positive = as_tensor(positive)
        return cls(stack([1.0 - positive, positive], axis=-1))


class SequenceLabeler(BlankModel):
    scheme = "labeling"

    def declare_head(self, store) -> None:
        # per-token 2H -> 2 projection ahead of the 2-class softmax
        store.add("output.weight", (2, 2 * self.config.hidden_dim))
        store.add("output.bias", (2,))

    def forward(self, tokens, training: bool = False, rng: Optional[np.random.Generator] = None) -> LabelerOutput:
        ids = self.check_ids(tokens)
        encoded = self.encode(ids, training, rng)
        logits = linear(encoded.states, self.params.tensor("output.weight"), self.params.tensor("output.bias"))
        return LabelerOutput(softmax(logits, axis=-1))

    def loss(self, tokens, blanks, training: bool = False, rng: Optional[np.random.Generator] = None,
             reduction: str = "mean") -> Tensor:
        ids = self.check_ids(tokens)
        blanks = np.asarray(blanks, dtype=np.int64)
        if blanks.shape != ids.shape[:-1] or (blanks < 0).any() or (blanks >= ids.shape[-1]).any():
            raise TargetRangeError(f"blank positions {blanks.tolist()} invalid for sentences of length {ids.shape[-1]}")
        labels = np.zeros(ids.shape, dtype=np.int64)
        np.put_along_axis(labels, blanks[..., None], 1, axis=-1)
        return label_loss(self.forward(ids, training, rng), labels, reduction)

    def blank_scores(self, tokens) -> np.ndarray:
        return self.forward(tokens).positive


def label_forward(tokens, model: SequenceLabeler, training: bool = False,
                  rng: Optional[np.random.Generator] = None) -> LabelerOutput:
    return model.forward(tokens, training, rng)


def label_loss(output: LabelerOutput, gold, reduction: str = "mean") -> Tensor:
    """
    Binary cross-entropy averaged over the tokens of each sentence, then
    over sentences. ``gold`` is the one-hot label sequence (..., L).
    """
    labels = np.asarray(gold, dtype=np.int64)
    if labels.shape != output.distribution.shape[:-1]:
        raise CorpusError(f"gold labels {labels.shape} do not match output {output.distribution.shape[:-1]}")
    if ((labels != 0) & (labels != 1)).any() or (labels.sum(axis=-1) != 1).any():
        raise CorpusError("gold labels must contain exactly one positive per sentence")
    per_token = neg(log(pick(output.distribution, labels)))
    return reduce_sentences(reduce_mean(per_token, axis=-1), reduction)
