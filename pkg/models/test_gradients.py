import numpy as np
import pytest

from core.config import ModelConfig
from core.gradcheck import check_gradients
from models.factory import build_model
from scripts.gradient_check import TOY, check_model


def test_tiny_labeler_gradients(rng):
    model = build_model(ModelConfig(scheme="labeling", embed_dim=4, hidden_dim=4, num_layers=1, dropout=0.0), 8,
                        seed=0)
    ids = rng.integers(3, 8, size=3)
    report = check_gradients(lambda: model.loss(ids, 1), model.params)
    assert report.ok, report.max_error


@pytest.mark.parametrize("pooling", ["max", "mean", "last"])
@pytest.mark.parametrize("activation", ["linear", "tanh"])
def test_stacked_classifier_gradients(pooling, activation):
    config = ModelConfig(scheme="classification", pooling=pooling, attention_activation=activation, **TOY)
    result = check_model(config, length=4, seed=1)
    assert result["ok"], result["errors"]


def test_stacked_labeler_gradients():
    result = check_model(ModelConfig(scheme="labeling", **TOY), length=3, seed=2)
    assert result["ok"], result["errors"]
    assert set(result["errors"]) >= {"embedding", "encoder.1.bw.bias", "output.weight"}


def test_gradient_check_catches_a_wrong_gradient():
    model = build_model(ModelConfig(scheme="labeling", **TOY), 9, seed=0)
    ids = np.array([3, 4, 5])

    def skewed():
        loss = model.loss(ids, 0)
        # constant wrt the tape but not wrt the perturbed array
        return loss + float(model.params["output.bias"][0])

    assert not check_gradients(skewed, model.params).ok
