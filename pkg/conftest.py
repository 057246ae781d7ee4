# shared fixtures: tiny configs, a toy vocabulary and a hand-written corpus
import numpy as np
import pytest

from core.config import ModelConfig, OptimizerConfig, TrainConfig
from data.corpus import BlankRecord, Corpus
from data.text import build_vocab

TOY_DIMS = {"embed_dim": 5, "hidden_dim": 4, "num_layers": 1, "dropout": 0.0}

TOY_SENTENCES = [
    ("the cat sat on the mat", 1),
    ("a dog ran in the park", 1),
    ("the sun is hot", 1),
    ("birds sing in the morning", 0),
    ("the cat ran home", 1),
    ("a bird sat on a branch", 5),
]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def labeling_config():
    return ModelConfig(scheme="labeling", **TOY_DIMS)


@pytest.fixture
def classification_config():
    return ModelConfig(scheme="classification", **TOY_DIMS)


@pytest.fixture
def toy_corpus():
    return Corpus([BlankRecord(tokens=text.split(), blank=blank) for text, blank in TOY_SENTENCES])


@pytest.fixture
def toy_vocab(toy_corpus):
    return build_vocab(toy_corpus.sentences())


@pytest.fixture
def train_config():
    def _make(scheme="labeling", **overrides):
        model = ModelConfig(scheme=scheme, **TOY_DIMS)
        return TrainConfig(model=model, optimizer=OptimizerConfig(lr=0.01), batch_size=2, **overrides)
    return _make
