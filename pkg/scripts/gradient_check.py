# scripts/gradient_check.py
# compares tape gradients against central differences on toy-sized models
# usage: python -m scripts.gradient_check [--seed N] [--length L]
import argparse
import json
import logging
import sys

import numpy as np

from core.config import ModelConfig
from core.gradcheck import check_gradients
from core.utils import setup_logging
from models.factory import build_model

logger = logging.getLogger(__name__)

TOY = {"embed_dim": 5, "hidden_dim": 4, "num_layers": 2, "dropout": 0.0}


def check_model(config: ModelConfig, length: int, seed: int, rtol: float = 1e-4) -> dict:
    rng = np.random.default_rng(seed)
    vocab_size = 9
    model = build_model(config, vocab_size, seed=seed)
    ids = rng.integers(3, vocab_size, size=(2, length))
    blanks = rng.integers(0, length, size=2)
    report = check_gradients(lambda: model.loss(ids, blanks), model.params, rtol=rtol)
    return {"scheme": config.scheme, "pooling": config.pooling, "attention": config.attention_activation,
            "ok": report.ok, "worst": report.worst, "errors": report.max_error}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="finite-difference check of both blanking models")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--length", type=int, default=4)
    args = parser.parse_args(argv)
    setup_logging()

    configs = [ModelConfig(scheme="labeling", **TOY)]
    configs += [ModelConfig(scheme="classification", pooling=pooling, attention_activation=activation, **TOY)
                for pooling in ("max", "mean", "last") for activation in ("linear", "tanh")]
    results = [check_model(config, args.length, args.seed) for config in configs]
    for result in results:
        status = "✅" if result["ok"] else "❌"
        logger.info(f"{status} {result['scheme']} pooling={result['pooling']} attention={result['attention']} "
                    f"worst relative error {result['worst']:.2e}")
    print(json.dumps(results, indent=2))
    return 0 if all(r["ok"] for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
