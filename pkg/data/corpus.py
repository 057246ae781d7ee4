# data/corpus.py
"""
Blank-annotated sentences, the JSONL corpus format, and dataset splits.

One record per line: {"tokens": [...strings], "blank": int}, blank 0-based.
"""
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ValidationError, model_validator

from core.errors import CorpusError
from data.text import Vocabulary, encode

logger = logging.getLogger(__name__)

SplitName = Literal["train", "valid", "test", "all"]
SPLIT_NAMES = ("train", "valid", "test")


class BlankRecord(BaseModel):
    tokens: List[str]
    blank: int

    @model_validator(mode="after")
    def _blank_in_range(self) -> "BlankRecord":
        if not self.tokens:
            raise ValueError("tokens must be nonempty")
        if not 0 <= self.blank < len(self.tokens):
            raise ValueError(f"blank {self.blank} outside [0, {len(self.tokens)})")
        return self


@dataclass(frozen=True)
class BlankExample:
    """Vocabulary ids of one sentence plus the gold blank position (0-based)."""

    tokens: Tuple[int, ...]
    blank: int

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("a blank example needs at least one token")
        if not 0 <= self.blank < len(self.tokens):
            raise CorpusError(f"blank {self.blank} outside [0, {len(self.tokens)})")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Corpus:
    records: List[BlankRecord]
    split: SplitName = "all"
    examples: List[BlankExample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def sentences(self) -> List[List[str]]:
        return [record.tokens for record in self.records]

    def encoded(self, vocab: Vocabulary) -> "Corpus":
        examples = [BlankExample(tuple(encode(r.tokens, vocab)), r.blank) for r in self.records]
        return Corpus(self.records, self.split, examples)


def write_jsonl(records: Iterable[BlankRecord], path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(json.dumps(record.model_dump(), ensure_ascii=False) + "\n")
            count += 1
    logger.info(f"💾 Wrote {count} records to {path}")
    return count


def read_jsonl(path, split: SplitName = "all") -> Corpus:
    path = Path(path)
    records: List[BlankRecord] = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(BlankRecord.model_validate_json(line))
            except ValidationError as e:
                raise CorpusError(f"{path}:{lineno}: invalid record: {e.errors()[0]['msg']}") from e
    return Corpus(records, split)


def split_dataset(examples: Sequence, ratios: Tuple[float, float, float] = (0.7, 0.1, 0.2),
                  seed: int = 0) -> Tuple[list, list, list]:
    """
    Seeded shuffle, then contiguous slices of floor(r * N) for train and
    valid; the remainder goes to test.
    """
    n = len(examples)
    if n < 3:
        raise CorpusError(f"need at least 3 examples to split, got {n}")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must be three nonnegative numbers summing to 1, got {ratios}")
    order = np.random.default_rng(seed).permutation(n)
    # the epsilon keeps 0.7 * 30 from flooring to 20
    n_train = math.floor(ratios[0] * n + 1e-9)
    n_valid = math.floor(ratios[1] * n + 1e-9)
    shuffled = [examples[i] for i in order]
    return shuffled[:n_train], shuffled[n_train:n_train + n_valid], shuffled[n_train + n_valid:]


def split_grouped(examples: Sequence, group_size: int, ratios: Tuple[float, float, float] = (0.7, 0.1, 0.2),
                  seed: int = 0) -> Tuple[list, list, list]:
    """
    split_dataset over runs of ``group_size`` consecutive examples, each run
    landing whole in one split (the records generated from one sentence).
    """
    if group_size < 1 or len(examples) % group_size:
        raise CorpusError(f"{len(examples)} examples do not form groups of {group_size}")
    groups = [examples[i:i + group_size] for i in range(0, len(examples), group_size)]
    return tuple([example for group in part for example in group]
                 for part in split_dataset(groups, ratios, seed))


def length_buckets(examples: Sequence[BlankExample], indices: Iterable[int]) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """
    Group the selected examples by sentence length, in order of first
    appearance, yielding (ids (B, L), blanks (B,)) arrays. No padding needed.
    """
    groups: Dict[int, List[int]] = defaultdict(list)
    for idx in indices:
        groups[len(examples[idx])].append(idx)
    for members in groups.values():
        ids = np.array([examples[i].tokens for i in members], dtype=np.int64)
        blanks = np.array([examples[i].blank for i in members], dtype=np.int64)
        yield ids, blanks
