# scripts/benchmark.py
# teacher-imitation experiment: one synthetic corpus, the labeler once and
# the classifier with every pooling mode, test metrics side by side
# usage: python -m scripts.benchmark [--count 5000] [--dim 64] [--out results.json]
import argparse
import itertools
import json
import logging
import sys
import time
from pathlib import Path

from core.config import ModelConfig, TeacherConfig, TrainConfig
from core.utils import format_table, setup_logging
from data.corpus import Corpus, split_grouped
from data.text import build_vocab
from services.evaluation import evaluate
from services.trainer import fit
from synth.generator import generate_teacher_corpus

logger = logging.getLogger(__name__)


def run_benchmark(count: int = 5000, dim: int = 64, seed: int = 7, rule: str = "rarest",
                  epochs: dict = None, progress: bool = True) -> dict:
    epochs = epochs or {}
    teacher = TeacherConfig(count=count, seed=seed, rule=rule)
    corpus = generate_teacher_corpus(teacher)
    parts = split_grouped(corpus.records, teacher.blanks_per_sentence, seed=seed)
    train, valid, test = (Corpus(part, split) for part, split in zip(parts, ("train", "valid", "test")))
    vocab = build_vocab(train.sentences())
    test = test.encoded(vocab)

    runs = [ModelConfig(scheme="labeling", embed_dim=dim, hidden_dim=dim)]
    runs += [ModelConfig(scheme="classification", embed_dim=dim, hidden_dim=dim, pooling=pooling)
             for pooling in ("max", "mean", "last")]
    rows = []
    for model_cfg in runs:
        cfg = TrainConfig(model=model_cfg, epochs=epochs.get(model_cfg.scheme), seed=seed)
        started = time.perf_counter()
        result = fit(cfg, train, valid, vocab=vocab, progress=progress)
        metrics = evaluate(result.model, test, cfg.threshold)
        rows.append({
            "scheme": model_cfg.scheme,
            "pooling": model_cfg.pooling if model_cfg.scheme == "classification" else None,
            "best_epoch": result.best_epoch,
            "test_loss": metrics.loss,
            "test_f1": metrics.f1,
            "test_accuracy": metrics.accuracy,
            "seconds": round(time.perf_counter() - started, 1),
        })

    accuracy = {row["pooling"]: row["test_accuracy"] for row in rows if row["pooling"]}
    gaps = {f"{a}-{b}": abs(accuracy[a] - accuracy[b]) for a, b in itertools.combinations(sorted(accuracy), 2)}
    return {"rows": rows, "pooling_gaps": gaps, "max_pooling_gap": max(gaps.values())}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="teacher-imitation and pooling comparison")
    parser.add_argument("--count", type=int, default=5000)
    parser.add_argument("--dim", type=int, default=64, help="embedding and hidden size")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--rule", default="rarest", choices=["rarest", "rarest-content", "marker-adjacent"])
    parser.add_argument("--out", help="also write the results JSON here")
    args = parser.parse_args(argv)
    setup_logging()

    results = run_benchmark(args.count, args.dim, args.seed, args.rule)
    print(format_table(results["rows"], ["scheme", "pooling", "best_epoch", "test_loss", "test_f1",
                                         "test_accuracy", "seconds"]))
    print(json.dumps({"pooling_gaps": results["pooling_gaps"]}))
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=2), encoding="utf-8")
        logger.info(f"💾 Results written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
