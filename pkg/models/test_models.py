import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.config import ModelConfig
from core.errors import CorpusError, ShapeError, TargetRangeError, VocabularyError
from core.nn import LstmParams, bilstm_encode
from core.numcore import Tensor, nll
from data.text import BLANK_ID
from models.classifier import ClassifierOutput, SequenceClassifier, classify_forward, classify_loss
from models.decoding import decode_labels, first_argmax, generate_multi_blank, predict_blank
from models.factory import build_model
from models.labeler import LabelerOutput, SequenceLabeler, label_forward, label_loss
from models.params import ParameterStore

VOCAB = 12


class FixedScores:
    """Stands in for a model whose scores are known up front."""

    def __init__(self, scores):
        self.scores = np.asarray(scores, dtype=np.float64)

    def blank_scores(self, tokens):
        return self.scores[:len(tokens)]


def _sentence(rng, length):
    return rng.integers(3, VOCAB, size=length)


def _encoder(params, layer=0):
    def lstm(direction):
        prefix = f"encoder.{layer}.{direction}"
        return LstmParams(Tensor(params[f"{prefix}.w_input"]), Tensor(params[f"{prefix}.w_hidden"]),
                          Tensor(params[f"{prefix}.bias"]))
    return lstm("fw"), lstm("bw")


def _softmax(x):
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


# ---------- construction ---------- #

def test_factory_builds_the_configured_scheme(labeling_config, classification_config):
    assert isinstance(build_model(labeling_config, VOCAB, seed=0), SequenceLabeler)
    assert isinstance(build_model(classification_config, VOCAB, seed=0), SequenceClassifier)


def test_parameter_layout(labeling_config, classification_config):
    labeler = build_model(labeling_config, VOCAB, seed=0)
    shapes = labeler.params.shapes()
    assert shapes["embedding"] == (VOCAB, 5)
    assert shapes["encoder.0.fw.w_input"] == (16, 5)
    assert shapes["encoder.0.bw.w_hidden"] == (16, 4)
    assert shapes["output.weight"] == (2, 8)
    classifier = build_model(classification_config, VOCAB, seed=0)
    assert classifier.params.shapes()["attention.w"] == (8, 16)
    assert classifier.params.shapes()["attention.v"] == (8,)


def test_initialization_is_seeded_uniform_with_forget_bias(labeling_config):
    cfg = labeling_config.model_copy(update={"num_layers": 2})
    first = build_model(cfg, VOCAB, seed=3).params
    second = build_model(cfg, VOCAB, seed=3).params
    for name, array in first.items():
        assert_array_equal(array, second[name])
    bias = first["encoder.1.bw.bias"]
    assert_array_equal(bias[4:8], np.ones(4))
    assert np.abs(np.delete(bias, np.s_[4:8])).max() <= 0.08
    assert np.abs(first["embedding"]).max() <= 0.08


def test_foreign_parameters_are_rejected(labeling_config, classification_config):
    params = build_model(labeling_config, VOCAB, seed=0).params
    with pytest.raises(ShapeError):
        build_model(classification_config, VOCAB, params=params)
    with pytest.raises(ValueError):
        SequenceLabeler(classification_config, VOCAB)


def test_parameter_assignment_keeps_scalar_and_vector_shapes():
    store = ParameterStore()
    store.add("scale", ())
    store.add("bias", (3,))
    source = np.array([1.0, 2.0, 3.0])
    store["scale"] = np.asarray(2.5)
    store["bias"] = source
    source[0] = 9.0
    assert store["scale"].shape == ()
    assert store["scale"] == 2.5
    assert_array_equal(store["bias"], [1.0, 2.0, 3.0])
    with pytest.raises(ShapeError):
        store["scale"] = np.zeros(1)
    with pytest.raises(ShapeError):
        store["bias"] = np.zeros((1, 3))


def test_out_of_vocabulary_ids_are_rejected(labeling_config):
    model = build_model(labeling_config, VOCAB, seed=0)
    with pytest.raises(VocabularyError):
        model.forward([1, VOCAB])
    with pytest.raises(ShapeError):
        model.forward([])


# ---------- labeler ---------- #

def test_zero_labeler_is_undecided(labeling_config, rng):
    model = build_model(labeling_config, VOCAB, seed=0)
    model.params.fill_(0.0)
    ids = _sentence(rng, 6)
    assert_array_equal(label_forward(ids, model).positive, np.full(6, 0.5))
    assert_allclose(model.loss(ids, 2).item(), math.log(2), atol=1e-9)


def test_single_token_labeler_output(labeling_config):
    out = build_model(labeling_config, VOCAB, seed=0).forward([5])
    assert out.positive.shape == (1,)
    assert 0.0 < out.positive[0] < 1.0


def test_labeler_matches_composed_oracle(labeling_config, rng):
    for seed in range(5):
        model = build_model(labeling_config, VOCAB, seed=seed)
        p = model.params
        ids = _sentence(rng, 1 + seed)
        states = bilstm_encode(p["embedding"][ids], *_encoder(p)).states.data
        expected = _softmax(states @ p["output.weight"].T + p["output.bias"])[:, 1]
        assert_allclose(model.forward(ids).positive, expected, atol=1e-10)


def test_label_loss_closed_forms():
    gold = np.array([0, 1, 0])
    perfect = LabelerOutput.from_positive(gold.astype(float))
    assert abs(label_loss(perfect, gold).item()) < 1e-9
    undecided = LabelerOutput.from_positive(np.full(4, 0.5))
    assert_allclose(label_loss(undecided, [0, 0, 1, 0]).item(), math.log(2), atol=1e-12)


def test_label_loss_matches_binary_cross_entropy(rng):
    for _ in range(100):
        y_hat = rng.uniform(0.01, 0.99, size=3)
        gold = np.eye(3, dtype=int)[rng.integers(3)]
        expected = -np.mean(gold * np.log(y_hat) + (1 - gold) * np.log(1 - y_hat))
        assert_allclose(label_loss(LabelerOutput.from_positive(y_hat), gold).item(), expected, rtol=1e-12)


def test_label_loss_needs_exactly_one_positive():
    out = LabelerOutput.from_positive(np.full(3, 0.5))
    with pytest.raises(CorpusError):
        label_loss(out, [0, 0, 0])
    with pytest.raises(CorpusError):
        label_loss(out, [1, 0, 1])
    with pytest.raises(CorpusError):
        label_loss(out, [1, 0])


def test_labeler_loss_rejects_bad_blank(labeling_config):
    model = build_model(labeling_config, VOCAB, seed=0)
    with pytest.raises(TargetRangeError):
        model.loss([3, 4, 5], 3)


# ---------- classifier ---------- #

def test_single_token_classifier_is_certain(classification_config):
    model = build_model(classification_config, VOCAB, seed=0)
    assert_allclose(classify_forward([7], model).probabilities, [1.0])


def test_zero_attention_classifier_is_uniform(classification_config, rng):
    model = build_model(classification_config, VOCAB, seed=0)
    model.params["attention.v"] = np.zeros_like(model.params["attention.v"])
    for length in (1, 3, 7):
        ids = _sentence(rng, length)
        assert_allclose(model.forward(ids).probabilities, np.full(length, 1 / length), atol=1e-15)
        assert_allclose(model.loss(ids, length - 1).item(), math.log(length), atol=1e-9)


@pytest.mark.parametrize("pooling", ["max", "mean", "last"])
@pytest.mark.parametrize("activation", ["linear", "tanh"])
def test_classifier_matches_composed_oracle(classification_config, rng, pooling, activation):
    cfg = classification_config.model_copy(update={"pooling": pooling, "attention_activation": activation})
    act = np.tanh if activation == "tanh" else (lambda z: z)
    for seed in range(3):
        model = build_model(cfg, VOCAB, seed=seed)
        p = model.params
        ids = _sentence(rng, 3)
        states = bilstm_encode(p["embedding"][ids], *_encoder(p)).states.data
        summary = {"max": states.max(axis=0), "mean": states.mean(axis=0), "last": states[-1]}[pooling]
        u = np.array([p["attention.v"] @ act(p["attention.w"] @ np.concatenate([h, summary])) for h in states])
        assert_allclose(model.forward(ids).probabilities, _softmax(u), atol=1e-10)


def test_classifier_output_is_a_distribution_over_positions(classification_config, rng):
    model = build_model(classification_config, VOCAB, seed=1)
    for _ in range(1000):
        length = int(rng.integers(1, 9))
        out = model.forward(_sentence(rng, length)).probabilities
        assert out.shape == (length,)
        assert abs(out.sum() - 1.0) <= 1e-6


def test_classify_loss_closed_forms_and_nll_oracle(rng):
    assert classify_loss(ClassifierOutput(Tensor([0.0, 1.0, 0.0])), 1).item() == 0.0
    assert_allclose(classify_loss(ClassifierOutput(Tensor(np.full(5, 0.2))), 3).item(), math.log(5), atol=1e-12)
    for _ in range(100):
        dist = rng.dirichlet(np.ones(6))
        gold = int(rng.integers(6))
        assert_allclose(classify_loss(ClassifierOutput(Tensor(dist)), gold).item(), nll(dist, gold).item(),
                        rtol=1e-12)


def test_classify_loss_range_check():
    with pytest.raises(TargetRangeError):
        classify_loss(ClassifierOutput(Tensor([0.5, 0.5])), 2)


# ---------- batching and determinism ---------- #

@pytest.mark.parametrize("scheme", ["labeling", "classification"])
def test_batched_forward_and_loss_match_per_sentence(scheme, rng):
    model = build_model(ModelConfig(scheme=scheme, embed_dim=5, hidden_dim=4, num_layers=2, dropout=0.0), VOCAB,
                        seed=0)
    batch = rng.integers(3, VOCAB, size=(3, 5))
    blanks = np.array([0, 4, 2])
    together = model.blank_scores(batch)
    for row in range(3):
        assert_allclose(together[row], model.blank_scores(batch[row]), atol=1e-12)
    per_sentence = [model.loss(batch[row], blanks[row]).item() for row in range(3)]
    assert_allclose(model.loss(batch, blanks).item(), np.mean(per_sentence), atol=1e-12)
    assert_allclose(model.loss(batch, blanks, reduction="sum").item(), np.sum(per_sentence), atol=1e-12)


def test_inference_is_bit_identical(labeling_config, rng):
    model = build_model(labeling_config.model_copy(update={"dropout": 0.5}), VOCAB, seed=0)
    ids = _sentence(rng, 5)
    assert_array_equal(model.forward(ids).positive, model.forward(ids).positive)


def test_training_mode_dropout_is_seeded(labeling_config, rng):
    model = build_model(labeling_config.model_copy(update={"dropout": 0.5}), VOCAB, seed=0)
    ids = _sentence(rng, 5)
    first = model.forward(ids, training=True, rng=np.random.default_rng(9)).positive
    second = model.forward(ids, training=True, rng=np.random.default_rng(9)).positive
    assert_array_equal(first, second)
    assert not np.array_equal(first, model.forward(ids).positive)


# ---------- decoding ---------- #

def test_predict_blank_ties_go_to_lowest_index(labeling_config, classification_config, rng):
    for cfg in (labeling_config, classification_config):
        model = build_model(cfg, VOCAB, seed=0)
        model.params.fill_(0.0)
        assert predict_blank(_sentence(rng, 4), model) == 0


def test_predict_blank_takes_the_argmax():
    assert predict_blank([3, 4, 5], FixedScores([0.1, 0.7, 0.2])) == 1


def test_argmax_is_invariant_under_monotone_transforms(rng):
    for _ in range(50):
        scores = rng.normal(size=6)
        assert first_argmax(scores) == first_argmax(np.exp(3 * scores) + 1) == first_argmax(_softmax(scores))


def test_decode_labels_is_a_strict_threshold(rng):
    assert decode_labels(LabelerOutput.from_positive([0.9, 0.1, 0.6])) == {0, 2}
    assert decode_labels(LabelerOutput.from_positive(np.full(4, 0.5))) == set()
    assert decode_labels(np.array([0.2, 0.8]), threshold=0.1) == {0, 1}
    for _ in range(100):
        y_hat = rng.uniform(size=7)
        assert decode_labels(y_hat) == {i for i in range(7) if y_hat[i] > 0.5}


def test_multi_blank_single_pass_is_predict_blank(labeling_config, rng):
    model = build_model(labeling_config, VOCAB, seed=4)
    ids = _sentence(rng, 6)
    assert generate_multi_blank(ids, model, 1) == [predict_blank(ids, model)]


def test_multi_blank_exhausts_every_position(classification_config, rng):
    model = build_model(classification_config, VOCAB, seed=4)
    ids = _sentence(rng, 5)
    assert sorted(generate_multi_blank(ids, model, 5)) == list(range(5))


def test_multi_blank_masks_between_passes():
    trace = []
    positions = generate_multi_blank([3, 4, 5, 6, 7], FixedScores([0.1, 0.9, 0.3, 0.8, 0.2]), 2, trace=trace)
    assert positions == [1, 3]
    assert trace[0] == [3, 4, 5, 6, 7]
    assert trace[1] == [3, BLANK_ID, 5, 6, 7]
    assert trace[1].count(BLANK_ID) == 1


def test_multi_blank_picks_distinct_non_sentinel_positions(labeling_config, rng):
    model = build_model(labeling_config, VOCAB, seed=2)
    for _ in range(100):
        length = int(rng.integers(1, 7))
        ids = _sentence(rng, length)
        k = int(rng.integers(1, length + 1))
        positions = generate_multi_blank(ids, model, k)
        assert len(positions) == len(set(positions)) == k
        assert all(ids[p] != BLANK_ID for p in positions)


def test_multi_blank_skips_already_blanked_positions():
    positions = generate_multi_blank([3, BLANK_ID, 5], FixedScores([0.1, 0.9, 0.3]), 2)
    assert positions == [2, 0]
    with pytest.raises(ValueError):
        generate_multi_blank([3, BLANK_ID, 5], FixedScores([0.1, 0.9, 0.3]), 3)


def test_multi_blank_k_range(labeling_config):
    model = build_model(labeling_config, VOCAB, seed=0)
    with pytest.raises(ValueError):
        generate_multi_blank([3, 4], model, 0)
    with pytest.raises(ValueError):
        generate_multi_blank([3, 4], model, 3)


# ---------- parameter store ---------- #

def test_parameter_store_copy_and_shape_guard():
    store = ParameterStore()
    store.add("w", (2, 3))
    clone = store.copy()
    store["w"] = np.ones((2, 3))
    assert_array_equal(clone["w"], np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        store["w"] = np.ones((3, 2))
    with pytest.raises(ShapeError):
        store.add("w", (1,))
    assert store.num_parameters == 6
