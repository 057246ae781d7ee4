# synth/generator.py
"""
Zipf-distributed synthetic sentences labeled by a teacher rule.

Tokens are drawn independently with P(rank r) proportional to r^-s, so a
handful of words dominate and "the rarest token" carries real signal.
"""
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from core.config import TeacherConfig
from core.errors import CorpusError
from data.corpus import BlankRecord, Corpus, write_jsonl
from data.text import BLANK_TOKEN
from synth.rules import teacher_blank_rule

logger = logging.getLogger(__name__)


def synthetic_lexicon(size: int) -> List[str]:
    width = len(str(size))
    return [f"w{str(i).zfill(width)}" for i in range(1, size + 1)]


def load_lexicon(path, size: int) -> List[str]:
    """First ``size`` distinct words of a one-word-per-line file, in rank order."""
    words: List[str] = []
    seen = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word and word not in seen:
            seen.add(word)
            words.append(word)
        if len(words) == size:
            return words
    raise CorpusError(f"{path}: lexicon has {len(words)} distinct words, need {size}")


def zipf_probabilities(size: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, size + 1, dtype=np.float64)
    weights = ranks ** -exponent
    return weights / weights.sum()


def corpus_frequencies(sentences: Iterable[Sequence[str]]) -> Counter:
    return Counter(token for sentence in sentences for token in sentence if token != BLANK_TOKEN)


def sample_sentences(cfg: TeacherConfig, lexicon: Sequence[str], rng: np.random.Generator) -> List[List[str]]:
    probs = zipf_probabilities(len(lexicon), cfg.zipf_exponent)
    sentences: List[List[str]] = []
    for _ in range(cfg.count):
        length = int(rng.integers(cfg.min_length, cfg.max_length + 1))
        sentence = [lexicon[i] for i in rng.choice(len(lexicon), size=length, p=probs)]
        if cfg.rule == "marker-adjacent" and rng.random() < cfg.marker_rate:
            sentence[int(rng.integers(0, length - 1))] = cfg.marker_token
        sentences.append(sentence)
    return sentences


def label_sentences(sentences: Sequence[Sequence[str]], freq_table: Dict[str, int], cfg: TeacherConfig,
                    stop_words: Sequence[str]) -> List[BlankRecord]:
    """
    ``blanks_per_sentence`` records per sentence; each later record sees the
    earlier choices replaced by the blank token.
    """
    records: List[BlankRecord] = []
    for sentence in sentences:
        current = list(sentence)
        for _ in range(cfg.blanks_per_sentence):
            position = teacher_blank_rule(current, freq_table, cfg.rule, stop_words, cfg.marker_token)
            records.append(BlankRecord(tokens=list(current), blank=position))
            current[position] = BLANK_TOKEN
    return records


def generate_teacher_corpus(cfg: TeacherConfig, path: Optional[str] = None) -> Corpus:
    """Deterministic in ``cfg.seed``; writes JSONL to ``path`` when given."""
    rng = np.random.default_rng(cfg.seed)
    lexicon = load_lexicon(cfg.lexicon_path, cfg.vocab_size) if cfg.lexicon_path else synthetic_lexicon(cfg.vocab_size)
    stop_words = cfg.stop_words if cfg.stop_words is not None else lexicon[:cfg.stop_list_size]

    sentences = sample_sentences(cfg, lexicon, rng)
    freq_table = corpus_frequencies(sentences)
    records = label_sentences(sentences, freq_table, cfg, stop_words)
    logger.info(f"🧪 Generated {len(records)} teacher examples from {len(sentences)} sentences (rule={cfg.rule})")
    if path is not None:
        write_jsonl(records, path)
    return Corpus(records)
