# data/text.py
"""Tokenization and the token <-> id vocabulary."""
import json
import logging
import string
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from pydantic import BaseModel, Field

from core.errors import CorpusError, VocabularyError

logger = logging.getLogger(__name__)

PAD_TOKEN, UNK_TOKEN, BLANK_TOKEN = "<pad>", "<unk>", "<blank>"
PAD_ID, UNK_ID, BLANK_ID = 0, 1, 2
RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, BLANK_TOKEN)

_PUNCTUATION = frozenset(string.punctuation)


def tokenize(text: str) -> List[str]:
    """
    Whitespace split, then leading and trailing ASCII punctuation characters
    become tokens of their own. Internal punctuation ("don't") stays.
    Everything is lowercased.
    """
    tokens: List[str] = []
    for chunk in text.split():
        start, end = 0, len(chunk)
        while start < end and chunk[start] in _PUNCTUATION:
            start += 1
        while end > start and chunk[end - 1] in _PUNCTUATION:
            end -= 1
        tokens.extend(chunk[:start])
        if start < end:
            tokens.append(chunk[start:end])
        tokens.extend(chunk[end:])
    return [token.lower() for token in tokens]


class VocabularyFile(BaseModel):
    min_freq: int = Field(ge=1)
    tokens: List[str]


class Vocabulary:
    """Dense ids: reserved entries first, then tokens by descending frequency."""

    def __init__(self, tokens: Sequence[str], min_freq: int = 1):
        self.min_freq = min_freq
        self.id_to_token: List[str] = list(RESERVED_TOKENS) + list(tokens)
        self.token_to_id: Dict[str, int] = {}
        for idx, token in enumerate(self.id_to_token):
            if token in self.token_to_id:
                raise VocabularyError(f"duplicate vocabulary entry '{token}'")
            self.token_to_id[token] = idx

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and other.min_freq == self.min_freq \
            and other.id_to_token == self.id_to_token

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self.id_to_token):
            raise VocabularyError(f"id {idx} out of range [0, {len(self)})")
        return self.id_to_token[idx]

    @property
    def tokens(self) -> List[str]:
        """Non-reserved entries in id order."""
        return self.id_to_token[len(RESERVED_TOKENS):]

    def to_dict(self) -> dict:
        return VocabularyFile(min_freq=self.min_freq, tokens=self.tokens).model_dump()

    @classmethod
    def from_dict(cls, raw: dict) -> "Vocabulary":
        parsed = VocabularyFile.model_validate(raw)
        return cls(parsed.tokens, parsed.min_freq)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocab(sentences: Iterable[Sequence[str]], min_freq: int = 1) -> Vocabulary:
    """Vocabulary over pre-tokenized training sentences with a frequency floor."""
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    counts: Counter = Counter()
    seen = 0
    for sentence in sentences:
        counts.update(token for token in sentence if token not in RESERVED_TOKENS)
        seen += 1
    if seen == 0:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    kept = sorted((token for token, n in counts.items() if n >= min_freq), key=lambda t: (-counts[t], t))
    logger.info(f"📚 Vocabulary built: {len(kept)} tokens kept of {len(counts)} (min_freq={min_freq})")
    return Vocabulary(kept, min_freq)


def encode(tokens: Sequence[str], vocab: Vocabulary) -> List[int]:
    return [vocab.lookup(token) for token in tokens]


def decode(ids: Sequence[int], vocab: Vocabulary) -> List[str]:
    return [vocab.token(int(idx)) for idx in ids]


def unknown_rate(sentences: Iterable[Sequence[str]], vocab: Vocabulary) -> Dict[str, float]:
    """Distinct and running counts of tokens that would encode to UNK."""
    distinct, running, total = set(), 0, 0
    for sentence in sentences:
        for token in sentence:
            total += 1
            if token not in vocab:
                distinct.add(token)
                running += 1
    return {
        "unknown_types": len(distinct),
        "unknown_tokens": running,
        "total_tokens": total,
        "unknown_token_rate": running / total if total else 0.0,
    }
