# services/trainer.py
"""
Mini-batch training for both schemes: seeded shuffle, length-bucketed
forward/backward on one tape per batch, global-norm clipping, Adam, and
best-validation checkpoint selection.
"""
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from core.config import TrainConfig
from core.errors import CorpusError, DivergenceError, NonFiniteError
from core.numcore import Tape
from core.utils import log_epoch, log_run_end, log_run_start
from data.corpus import BlankExample, Corpus, length_buckets
from data.text import Vocabulary, build_vocab
from models.base import BlankModel
from models.factory import build_model
from services.checkpoint import Checkpoint, save_checkpoint
from services.evaluation import Metrics, evaluate
from services.optim import AdamState, adam_step, clip_global_norm

logger = logging.getLogger(__name__)


@dataclass
class FitResult:
    checkpoint: Checkpoint
    history: List[Dict[str, Any]] = field(default_factory=list)
    best_epoch: Optional[int] = None
    model: Optional[BlankModel] = None


def batch_loss(model: BlankModel, examples: Sequence[BlankExample], indices: Sequence[int],
               training: bool = True, rng: Optional[np.random.Generator] = None):
    """Mean per-sentence loss of a mini-batch, one forward pass per length bucket."""
    total = None
    for ids, blanks in length_buckets(examples, indices):
        part = model.loss(ids, blanks, training=training, rng=rng, reduction="sum")
        total = part if total is None else total + part
    return total * (1.0 / len(indices))


def train_step(model: BlankModel, examples: Sequence[BlankExample], indices: Sequence[int],
               state: AdamState, rng: Optional[np.random.Generator] = None, training: bool = True) -> float:
    """Forward, backward, clip and one Adam update; returns the batch loss before the update."""
    with Tape() as tape:
        loss = batch_loss(model, examples, indices, training, rng)
    grads = tape.backward(loss, model.params)
    grads = clip_global_norm(grads, state.config.clip_norm)
    adam_step(model.params, grads, state)
    return loss.item()


def _metrics_record(prefix: str, metrics: Metrics) -> Dict[str, Any]:
    return {f"{prefix}_{key}": value for key, value in metrics.model_dump(exclude={"count"}).items()
            if value is not None}


def fit(cfg: TrainConfig, train: Corpus, valid: Corpus, vocab: Optional[Vocabulary] = None,
        progress: bool = True) -> FitResult:
    """
    Train a fresh model and return the best-validation checkpoint with the
    per-epoch history. The vocabulary is built from the training split
    unless one is passed in.
    """
    if not len(train):
        raise CorpusError("training corpus is empty")
    if not len(valid):
        raise CorpusError("validation corpus is empty")
    vocab = vocab or build_vocab(train.sentences())
    train_examples = train.encoded(vocab).examples
    valid_enc = valid.encoded(vocab)

    init_seed, shuffle_seed, dropout_seed = np.random.SeedSequence(cfg.seed).spawn(3)
    model = build_model(cfg.model, len(vocab), seed=init_seed, dtype=np.dtype(cfg.dtype))
    state = AdamState.for_store(model.params, cfg.optimizer)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    dropout_rng = np.random.default_rng(dropout_seed)

    log_run_start("train", {
        "scheme": cfg.scheme,
        "examples": f"{len(train_examples)} train / {len(valid_enc)} valid",
        "vocabulary": len(vocab),
        "parameters": model.params.num_parameters,
        "epochs": cfg.epochs,
    })

    metrics_file = None
    if cfg.metrics_path:
        Path(cfg.metrics_path).parent.mkdir(parents=True, exist_ok=True)
        metrics_file = open(cfg.metrics_path, "w", encoding="utf-8", newline="\n")

    history: List[Dict[str, Any]] = []
    last_good = Checkpoint(cfg, vocab, model.params.copy(), step=0)
    best: Optional[Checkpoint] = None
    best_score, best_epoch = -1.0, None
    n = len(train_examples)
    try:
        for epoch in range(1, cfg.epochs + 1):
            order = shuffle_rng.permutation(n)
            running, seen = 0.0, 0
            bar = tqdm(range(0, n, cfg.batch_size), desc=f"epoch {epoch}/{cfg.epochs}", unit="batch",
                       ncols=80, file=sys.stderr, disable=not progress, leave=False)
            for start in bar:
                indices = order[start:start + cfg.batch_size]
                try:
                    loss = train_step(model, train_examples, indices, state, dropout_rng)
                except NonFiniteError as e:
                    raise DivergenceError(f"training diverged at step {state.t + 1} (epoch {epoch}): {e}",
                                          checkpoint=best or last_good, history=history) from e
                running += loss * len(indices)
                seen += len(indices)
                bar.set_postfix(loss=f"{running / seen:.4f}")

            record: Dict[str, Any] = {"epoch": epoch, "step": state.t, "train_loss": running / seen}
            if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
                try:
                    metrics = evaluate(model, valid_enc, cfg.threshold)
                except NonFiniteError as e:
                    raise DivergenceError(f"validation diverged after step {state.t} (epoch {epoch}): {e}",
                                          checkpoint=best or last_good, history=history) from e
                record.update(_metrics_record("valid", metrics))
                score = metrics.selection_score()
                record["improved"] = best is None or score > best_score
                if record["improved"]:
                    best_score, best_epoch = score, epoch
                    best = Checkpoint(cfg, vocab, model.params.copy(), step=state.t)
            last_good = Checkpoint(cfg, vocab, model.params.copy(), step=state.t)

            history.append(record)
            log_epoch(record)
            if metrics_file is not None:
                metrics_file.write(json.dumps(record, sort_keys=True) + "\n")
                metrics_file.flush()
    except DivergenceError as e:
        if cfg.checkpoint_path:
            save_checkpoint(e.checkpoint, cfg.checkpoint_path)
        raise
    finally:
        if metrics_file is not None:
            metrics_file.close()

    # the final epoch is always evaluated, so best is set
    if cfg.checkpoint_path:
        save_checkpoint(best, cfg.checkpoint_path)
    log_run_end("train", {"best_epoch": best_epoch, "best_valid": round(best_score, 4), "steps": state.t})
    return FitResult(checkpoint=best, history=history, best_epoch=best_epoch,
                     model=build_model(cfg.model, len(vocab), params=best.params))
