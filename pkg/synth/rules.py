# synth/rules.py
"""Deterministic rule-based blanking that the learned models imitate."""
import logging
from typing import Collection, Mapping, Optional, Sequence

from core.errors import RuleError
from data.text import BLANK_TOKEN

logger = logging.getLogger(__name__)

RULES = ("rarest", "rarest-content", "marker-adjacent")


def _rarest(tokens: Sequence[str], freq_table: Mapping[str, int], candidates: Sequence[int]) -> int:
    # min() keeps the first of equal keys, so ties go to the leftmost position
    return min(candidates, key=lambda i: freq_table.get(tokens[i], 0))


def teacher_blank_rule(tokens: Sequence[str], freq_table: Mapping[str, int], rule: str = "rarest",
                       stop_words: Optional[Collection[str]] = None, marker: str = "zz") -> int:
    """
    Position to blank in ``tokens``:

    - ``rarest``: lowest corpus frequency, leftmost on ties
    - ``rarest-content``: the same, ignoring stop words (all stop words falls back to rarest)
    - ``marker-adjacent``: the token right after the first ``marker``, else the rarest non-marker token

    Positions already holding the blank token are never chosen.
    """
    if rule not in RULES:
        raise RuleError(f"unknown teacher rule '{rule}', expected one of {RULES}")
    candidates = [i for i, token in enumerate(tokens) if token != BLANK_TOKEN]
    if not candidates:
        raise RuleError("sentence has no position left to blank")

    if rule == "rarest-content":
        stops = set(stop_words or ())
        content = [i for i in candidates if tokens[i] not in stops]
        return _rarest(tokens, freq_table, content or candidates)
    if rule == "marker-adjacent":
        for i, token in enumerate(tokens[:-1]):
            if token == marker and tokens[i + 1] != BLANK_TOKEN:
                return i + 1
        return _rarest(tokens, freq_table, [i for i in candidates if tokens[i] != marker] or candidates)
