# models/decoding.py
"""Turning model scores into blank positions."""
import logging
from typing import List, Optional, Sequence, Set

import numpy as np

from data.text import BLANK_ID
from models.base import BlankModel
from models.labeler import LabelerOutput

logger = logging.getLogger(__name__)


def first_argmax(scores: np.ndarray, allowed: Optional[np.ndarray] = None) -> int:
    """Index of the largest score among allowed positions; ties go to the lowest index."""
    scores = np.asarray(scores, dtype=np.float64)
    if allowed is not None:
        if not allowed.any():
            raise ValueError("no position is available")
        scores = np.where(allowed, scores, -np.inf)
    return int(np.argmax(scores))


def predict_blank(tokens: Sequence[int], model: BlankModel, allowed: Optional[np.ndarray] = None) -> int:
    """Most likely blank position of one sentence (argmax of ŷ or of the position distribution)."""
    scores = model.blank_scores(np.asarray(tokens, dtype=np.int64))
    return first_argmax(scores, allowed)


def decode_labels(output, threshold: float = 0.5) -> Set[int]:
    """Positions whose positive-class probability is strictly above ``threshold``."""
    positive = output.positive if isinstance(output, LabelerOutput) else np.asarray(output)
    return {int(i) for i in np.flatnonzero(positive > threshold)}


def generate_multi_blank(tokens: Sequence[int], model: BlankModel, k: int,
                         trace: Optional[List[List[int]]] = None) -> List[int]:
    """
    k passes of predict_blank; after each pass the chosen token is replaced
    by the BLANK id so the next pass sees the partially blanked sentence.
    Positions already holding BLANK are never chosen.

    If ``trace`` is given, the input of every pass is appended to it.
    """
    current = np.array(tokens, dtype=np.int64)
    available = int((current != BLANK_ID).sum())
    if k < 1 or k > len(current):
        raise ValueError(f"k must be in [1, {len(current)}], got {k}")
    if k > available:
        raise ValueError(f"only {available} positions are not already blanked, cannot choose {k}")
    chosen: List[int] = []
    for _ in range(k):
        if trace is not None:
            trace.append(current.tolist())
        position = predict_blank(current, model, allowed=current != BLANK_ID)
        chosen.append(position)
        current[position] = BLANK_ID
    logger.debug(f"multi-blank positions: {chosen}")
    return chosen
