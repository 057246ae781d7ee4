import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from core.errors import CorpusError, VocabularyError
from data.corpus import (BlankExample, BlankRecord, Corpus, length_buckets, read_jsonl, split_dataset,
                         split_grouped, write_jsonl)
from data.text import (BLANK_ID, BLANK_TOKEN, PAD_ID, UNK_ID, Vocabulary, build_vocab, decode, encode,
                       tokenize, unknown_rate)


# ---------- tokenize ---------- #

def test_tokenize_detaches_punctuation_and_lowercases():
    assert tokenize("The cat sat.") == ["the", "cat", "sat", "."]
    assert tokenize("Don't stop!") == ["don't", "stop", "!"]
    assert tokenize('"Hello," she said...') == ['"', "hello", ",", '"', "she", "said", ".", ".", "."]


def test_tokenize_empty_and_whitespace():
    assert tokenize("") == []
    assert tokenize("   \t\n ") == []
    assert tokenize("?!") == ["?", "!"]


# ---------- vocabulary ---------- #

def test_build_vocab_orders_by_frequency_then_token():
    vocab = build_vocab([["a", "b", "a"], ["c", "b"]])
    assert len(vocab) == 6
    assert vocab.id_to_token[:3] == ["<pad>", "<unk>", "<blank>"]
    assert vocab.tokens == ["a", "b", "c"]
    assert (vocab.lookup("<pad>"), vocab.lookup("<unk>"), vocab.lookup(BLANK_TOKEN)) == (PAD_ID, UNK_ID, BLANK_ID)


def test_min_freq_sends_rare_tokens_to_unk():
    vocab = build_vocab([["a", "b", "a"], ["c", "b"]], min_freq=2)
    assert vocab.tokens == ["a", "b"]
    assert encode(["c"], vocab) == [UNK_ID]


def test_build_vocab_rejects_empty_corpus():
    with pytest.raises(CorpusError):
        build_vocab([])
    with pytest.raises(ValueError):
        build_vocab([["a"]], min_freq=0)


def test_encode_decode_round_trip(toy_corpus, toy_vocab):
    for sentence in toy_corpus.sentences():
        ids = encode(sentence, toy_vocab)
        assert UNK_ID not in ids
        assert decode(ids, toy_vocab) == sentence
    assert encode(["zebra", "quantum"], toy_vocab) == [UNK_ID, UNK_ID]


def test_encode_of_any_text_is_valid(toy_vocab):
    ids = encode(tokenize("Completely NEW words, and the cat!"), toy_vocab)
    assert all(0 <= i < len(toy_vocab) for i in ids)


def test_vocabulary_file_round_trip(tmp_path, toy_vocab):
    path = tmp_path / "vocab.json"
    toy_vocab.save(path)
    assert json.loads(path.read_text()) == {"min_freq": 1, "tokens": toy_vocab.tokens}
    assert Vocabulary.load(path) == toy_vocab


def test_vocabulary_id_errors(toy_vocab):
    with pytest.raises(VocabularyError):
        toy_vocab.token(len(toy_vocab))
    with pytest.raises(VocabularyError):
        Vocabulary(["a", "a"])


def test_unknown_rate_counts_types_and_tokens(toy_vocab):
    report = unknown_rate([["the", "zebra", "zebra"], ["quantum"]], toy_vocab)
    assert report["unknown_types"] == 2
    assert report["unknown_tokens"] == 3
    assert report["total_tokens"] == 4
    assert report["unknown_token_rate"] == 0.75


# ---------- records and corpus files ---------- #

def test_blank_record_validation():
    with pytest.raises(ValueError):
        BlankRecord(tokens=["a", "b"], blank=2)
    with pytest.raises(ValueError):
        BlankRecord(tokens=[], blank=0)
    with pytest.raises(CorpusError):
        BlankExample((4, 5), -1)


def test_jsonl_round_trip(tmp_path, toy_corpus):
    path = tmp_path / "corpus.jsonl"
    assert write_jsonl(toy_corpus.records, path) == len(toy_corpus)
    first = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
    assert first == {"tokens": ["the", "cat", "sat", "on", "the", "mat"], "blank": 1}
    loaded = read_jsonl(path, "train")
    assert loaded.split == "train"
    assert loaded.records == toy_corpus.records


def test_read_jsonl_names_the_bad_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"tokens": ["a", "b"], "blank": 1}\n\n{"tokens": ["a"], "blank": 3}\n', encoding="utf-8")
    with pytest.raises(CorpusError, match=r"bad.jsonl:3"):
        read_jsonl(path)


def test_corpus_encoding(toy_corpus, toy_vocab):
    encoded = toy_corpus.encoded(toy_vocab)
    assert len(encoded.examples) == len(toy_corpus)
    assert encoded.examples[0].blank == 1
    assert list(encoded.examples[0].tokens) == encode(toy_corpus.records[0].tokens, toy_vocab)


# ---------- split ---------- #

@pytest.mark.parametrize("n, sizes", [(100, (70, 10, 20)), (10, (7, 1, 2)), (3, (2, 0, 1)), (30, (21, 3, 6))])
def test_split_sizes(n, sizes):
    parts = split_dataset(list(range(n)), seed=5)
    assert tuple(len(part) for part in parts) == sizes


def test_split_is_a_seeded_partition():
    items = list(range(50))
    train, valid, test = split_dataset(items, seed=11)
    assert sorted(train + valid + test) == items
    assert split_dataset(items, seed=11) == (train, valid, test)
    assert split_dataset(items, seed=12) != (train, valid, test)


def test_split_preconditions():
    with pytest.raises(CorpusError):
        split_dataset([1, 2])
    with pytest.raises(ValueError):
        split_dataset(list(range(10)), ratios=(0.5, 0.5, 0.5))


def test_grouped_split_keeps_each_group_together():
    items = [(group, member) for group in range(40) for member in range(3)]
    parts = split_grouped(items, 3, seed=4)
    assert tuple(len(part) for part in parts) == (84, 12, 24)
    owners = [{group for group, _ in part} for part in parts]
    assert not (owners[0] & owners[1] or owners[0] & owners[2] or owners[1] & owners[2])
    for part in parts:
        for start in range(0, len(part), 3):
            assert [member for _, member in part[start:start + 3]] == [0, 1, 2]
            assert len({group for group, _ in part[start:start + 3]}) == 1
    assert split_grouped(list(range(30)), 1, seed=4) == split_dataset(list(range(30)), seed=4)
    with pytest.raises(CorpusError):
        split_grouped(items[:-1], 3)


# ---------- length buckets ---------- #

def test_length_buckets_group_without_padding():
    examples = [BlankExample((3, 4), 0), BlankExample((3, 4, 5), 2), BlankExample((6, 7), 1),
                BlankExample((8, 9, 10), 0)]
    buckets = list(length_buckets(examples, [0, 1, 2, 3]))
    assert [ids.shape for ids, _ in buckets] == [(2, 2), (2, 3)]
    ids, blanks = buckets[0]
    assert_array_equal(ids, [[3, 4], [6, 7]])
    assert_array_equal(blanks, [0, 1])
    assert sum(len(b) for _, b in length_buckets(examples, [3, 1])) == 2
    assert isinstance(buckets[1][0], np.ndarray)
