# services/evaluation.py
"""Validation/test metrics for both blanking schemes."""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Set

import numpy as np
from pydantic import BaseModel, Field

from core.errors import CorpusError
from data.corpus import BlankExample, Corpus, length_buckets
from models.base import BlankModel
from models.classifier import classify_loss
from models.decoding import decode_labels, first_argmax
from models.labeler import label_loss

logger = logging.getLogger(__name__)


class Metrics(BaseModel):
    """Mean loss plus P/R/F1 (labeling) or accuracy (classification)."""

    loss: float = 0.0
    count: int = 0
    precision: Optional[float] = Field(None, ge=0.0, le=1.0)
    recall: Optional[float] = Field(None, ge=0.0, le=1.0)
    f1: Optional[float] = Field(None, ge=0.0, le=1.0)
    accuracy: Optional[float] = Field(None, ge=0.0, le=1.0)

    def selection_score(self) -> float:
        """The metric best-checkpoint selection compares (F1 or accuracy)."""
        return self.f1 if self.f1 is not None else (self.accuracy or 0.0)


@dataclass(frozen=True)
class LabelingCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "LabelingCounts") -> "LabelingCounts":
        return LabelingCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def count_labeling(predicted: Iterable[Set[int]], gold: Iterable[Set[int]]) -> LabelingCounts:
    """Positive-class confusion counts over paired per-sentence position sets."""
    total = LabelingCounts()
    for pred, true in zip(predicted, gold):
        pred, true = set(pred), set(true)
        total = total + LabelingCounts(len(pred & true), len(pred - true), len(true - pred))
    return total


def accuracy_score(predicted: Sequence[int], gold: Sequence[int]) -> float:
    if len(predicted) != len(gold):
        raise ValueError("prediction and gold counts differ")
    if not gold:
        return 0.0
    return sum(int(p == g) for p, g in zip(predicted, gold)) / len(gold)


def _examples(corpus: Corpus) -> List[BlankExample]:
    if len(corpus.records) and not corpus.examples:
        raise CorpusError("corpus must be encoded with a vocabulary before evaluation")
    return corpus.examples


def eval_labeling(model: BlankModel, corpus: Corpus, threshold: float = 0.5) -> Metrics:
    examples = _examples(corpus)
    counts = LabelingCounts()
    total_loss = 0.0
    for ids, blanks in length_buckets(examples, range(len(examples))):
        output = model.forward(ids)
        gold = np.zeros(ids.shape, dtype=np.int64)
        np.put_along_axis(gold, blanks[:, None], 1, axis=-1)
        total_loss += label_loss(output, gold, reduction="sum").item()
        predicted = [decode_labels(row, threshold) for row in output.positive]
        counts = counts + count_labeling(predicted, [{int(b)} for b in blanks])
    n = len(examples)
    return Metrics(loss=total_loss / n if n else 0.0, count=n,
                   precision=counts.precision, recall=counts.recall, f1=counts.f1)


def eval_classification(model: BlankModel, corpus: Corpus) -> Metrics:
    examples = _examples(corpus)
    predicted: List[int] = []
    gold: List[int] = []
    total_loss = 0.0
    for ids, blanks in length_buckets(examples, range(len(examples))):
        output = model.forward(ids)
        total_loss += classify_loss(output, blanks, reduction="sum").item()
        predicted.extend(first_argmax(row) for row in output.probabilities)
        gold.extend(int(b) for b in blanks)
    n = len(examples)
    return Metrics(loss=total_loss / n if n else 0.0, count=n, accuracy=accuracy_score(predicted, gold))


def evaluate(model: BlankModel, corpus: Corpus, threshold: float = 0.5) -> Metrics:
    if model.scheme == "labeling":
        return eval_labeling(model, corpus, threshold)
    return eval_classification(model, corpus)
