# cli/commands.py
"""
Subcommand handlers. Results go to stdout as JSON (or the metrics table /
blanked sentence); logs and progress bars go to stderr.
"""
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from cli.parser import CommandSpec, parse_command
from core.config import TeacherConfig, TrainConfig, load_config
from core.errors import CheckpointError, DivergenceError, UsageError, error_payload
from core.utils import format_table, log_run_end, log_run_start, setup_logging
from data.corpus import read_jsonl, split_grouped, write_jsonl
from data.text import Vocabulary, build_vocab, decode, encode, tokenize, unknown_rate
from models.decoding import generate_multi_blank
from services.checkpoint import load_checkpoint, model_from_checkpoint
from services.evaluation import evaluate
from services.trainer import fit
from synth.generator import generate_teacher_corpus

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FILES = 2
EXIT_DIVERGED = 3
EXIT_USAGE = 64

BLANK_RENDERING = "____"
SPLITS = ("train", "valid", "test")


def _emit(payload: Any) -> None:
    sys.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")
    sys.stdout.flush()


def _paths(data_dir: str) -> Dict[str, Path]:
    root = Path(data_dir)
    paths = {split: root / f"{split}.jsonl" for split in SPLITS}
    paths.update(vocab=root / "vocab.json", checkpoint=root / "model.ckpt", metrics=root / "metrics.jsonl")
    return paths


def _checkpoint_path(spec: CommandSpec) -> Path:
    return Path(spec.options.get("checkpoint") or _paths(spec.data_dir)["checkpoint"])


# ---------- synth ---------- #

def cmd_synth(spec: CommandSpec) -> int:
    cfg = load_config(TeacherConfig, spec.config, spec.overrides)
    paths = _paths(spec.data_dir)
    log_run_start("synth", {"rule": cfg.rule, "count": cfg.count, "vocab_size": cfg.vocab_size,
                            "seed": cfg.seed, "data_dir": spec.data_dir})

    corpus = generate_teacher_corpus(cfg)
    parts = dict(zip(SPLITS, split_grouped(corpus.records, cfg.blanks_per_sentence, seed=cfg.seed)))
    Path(spec.data_dir).mkdir(parents=True, exist_ok=True)
    for split, records in parts.items():
        write_jsonl(records, paths[split])

    vocab = build_vocab((r.tokens for r in parts["train"]), spec.options.get("min_freq", 1))
    vocab.save(paths["vocab"])
    held_out = [r.tokens for split in ("valid", "test") for r in parts[split]]
    summary = {
        "status": "ok",
        "files": {name: str(paths[name]) for name in (*SPLITS, "vocab")},
        "counts": {split: len(records) for split, records in parts.items()},
        "vocab_size": len(vocab),
        "held_out_unknown": unknown_rate(held_out, vocab),
    }
    _emit(summary)
    log_run_end("synth", summary["counts"])
    return EXIT_OK


# ---------- train ---------- #

TRAIN_COLUMNS = {
    "labeling": ["epoch", "step", "train_loss", "valid_loss", "valid_precision", "valid_recall", "valid_f1", "improved"],
    "classification": ["epoch", "step", "train_loss", "valid_loss", "valid_accuracy", "improved"],
}


def cmd_train(spec: CommandSpec) -> int:
    cfg = load_config(TrainConfig, spec.config, spec.overrides)
    paths = _paths(spec.data_dir)
    updates = {}
    if cfg.checkpoint_path is None:
        updates["checkpoint_path"] = str(paths["checkpoint"])
    if cfg.metrics_path is None:
        updates["metrics_path"] = str(paths["metrics"])
    cfg = cfg.model_copy(update=updates)

    train, valid = read_jsonl(paths["train"], "train"), read_jsonl(paths["valid"], "valid")
    vocab = Vocabulary.load(paths["vocab"])
    result = fit(cfg, train, valid, vocab=vocab, progress=not spec.options.get("no_progress"))

    sys.stdout.write(format_table(result.history, TRAIN_COLUMNS[cfg.scheme]) + "\n")
    sys.stdout.flush()
    return EXIT_OK


# ---------- eval ---------- #

def cmd_eval(spec: CommandSpec) -> int:
    ckpt = load_checkpoint(_checkpoint_path(spec))
    split = spec.options.get("split", "test")
    corpus = read_jsonl(_paths(spec.data_dir)[split], split)
    threshold = spec.options.get("threshold")
    metrics = evaluate(model_from_checkpoint(ckpt), corpus.encoded(ckpt.vocab),
                       ckpt.config.threshold if threshold is None else threshold)
    _emit({"status": "ok", "split": split, "scheme": ckpt.config.scheme,
           **metrics.model_dump(exclude_none=True)})
    return EXIT_OK


# ---------- blank ---------- #

def render_blanks(tokens: Sequence[str], positions: Sequence[int]) -> str:
    chosen = set(positions)
    return " ".join(BLANK_RENDERING if i in chosen else token for i, token in enumerate(tokens))


def cmd_blank(spec: CommandSpec) -> int:
    tokens = tokenize(spec.options.get("text") or "")
    if not tokens:
        raise UsageError("--text must contain at least one token")
    k = spec.options.get("k", 1)
    if not 1 <= k <= len(tokens):
        raise UsageError(f"--k must be between 1 and {len(tokens)} for this sentence, got {k}")

    ckpt = load_checkpoint(_checkpoint_path(spec))
    trace: List[List[int]] = []
    positions = generate_multi_blank(encode(tokens, ckpt.vocab), model_from_checkpoint(ckpt), k, trace=trace)
    logger.debug(f"pass inputs: {[' '.join(decode(ids, ckpt.vocab)) for ids in trace]}")
    rendering = render_blanks(tokens, positions)
    sys.stdout.write(rendering + "\n")
    _emit({"sentence": rendering, "tokens": tokens, "positions": positions,
           "answers": [tokens[p] for p in positions]})
    return EXIT_OK


# ---------- inspect ---------- #

def cmd_inspect(spec: CommandSpec) -> int:
    ckpt = load_checkpoint(_checkpoint_path(spec))
    _emit({
        "format_version": ckpt.version,
        "step": ckpt.step,
        "scheme": ckpt.config.scheme,
        "model": ckpt.config.model.model_dump(mode="json"),
        "dtype": ckpt.params.dtype.name,
        "vocab_size": len(ckpt.vocab),
        "parameters": [{"name": name, "shape": list(shape)} for name, shape in ckpt.params.shapes().items()],
        "num_parameters": ckpt.params.num_parameters,
    })
    return EXIT_OK


COMMANDS: Dict[str, Callable[[CommandSpec], int]] = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "blank": cmd_blank,
    "inspect": cmd_inspect,
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, DivergenceError):
        return EXIT_DIVERGED
    if isinstance(exc, (OSError, CheckpointError)):
        return EXIT_FILES
    return EXIT_USAGE


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, dispatch, and turn failures into an error payload plus exit code."""
    try:
        spec = parse_command(argv)
        setup_logging(spec.log_level)
        return COMMANDS[spec.command](spec)
    except SystemExit as e:
        # --help
        return e.code if isinstance(e.code, int) else EXIT_OK
    except (ValidationError, ValueError, IndexError, ArithmeticError, OSError, DivergenceError) as e:
        setup_logging()
        logger.error(f"❌ {type(e).__name__}: {e}")
        payload = error_payload(e)
        if isinstance(e, ValidationError):
            payload["error_type"] = "VALIDATION_ERROR"
        _emit(payload)
        return exit_code(e)
