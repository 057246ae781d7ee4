# cli/parser.py
import argparse
import logging
from typing import Any, Dict, Literal, Optional, Sequence

from pydantic import BaseModel, Field

from core.config import settings
from core.errors import UsageError

logger = logging.getLogger(__name__)

Command = Literal["synth", "train", "eval", "blank", "inspect"]

# flag dest -> dotted config field, per command
SYNTH_OVERRIDES = {
    "count": "count",
    "vocab_size": "vocab_size",
    "rule": "rule",
    "seed": "seed",
    "min_length": "min_length",
    "max_length": "max_length",
    "zipf": "zipf_exponent",
    "blanks_per_sentence": "blanks_per_sentence",
    "lexicon": "lexicon_path",
}
TRAIN_OVERRIDES = {
    "scheme": "model.scheme",
    "pooling": "model.pooling",
    "attention": "model.attention_activation",
    "dropout": "model.dropout",
    "embed_dim": "model.embed_dim",
    "hidden_dim": "model.hidden_dim",
    "layers": "model.num_layers",
    "lr": "optimizer.lr",
    "clip": "optimizer.clip_norm",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "seed": "seed",
    "threshold": "threshold",
    "dtype": "dtype",
    "checkpoint": "checkpoint_path",
}


class CommandSpec(BaseModel):
    """One parsed invocation: the subcommand, its config file and flag overrides."""

    command: Command
    config: Optional[str] = None
    data_dir: str = settings.DATA_DIR
    log_level: Optional[str] = None
    overrides: Dict[str, Any] = Field(default_factory=dict)
    options: Dict[str, Any] = Field(default_factory=dict)


class CliArgumentParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its fields")
    parser.add_argument("--data-dir", default=None, help=f"data root (default: $CLOZEGEN_DATA_DIR or {settings.DATA_DIR})")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog="clozegen", description="Learn to pick fill-in-the-blank positions from a rule-based teacher")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    synth = sub.add_parser("synth", help="generate a teacher corpus and its train/valid/test split")
    _common(synth)
    synth.add_argument("--count", type=int, help="number of sentences")
    synth.add_argument("--vocab-size", type=int)
    synth.add_argument("--rule", choices=["rarest", "rarest-content", "marker-adjacent"])
    synth.add_argument("--seed", type=int)
    synth.add_argument("--min-length", type=int)
    synth.add_argument("--max-length", type=int)
    synth.add_argument("--zipf", type=float, help="Zipf exponent of the token distribution")
    synth.add_argument("--blanks-per-sentence", type=int)
    synth.add_argument("--lexicon", help="word list in frequency-rank order, one per line")
    synth.add_argument("--min-freq", type=int, default=1, help="vocabulary frequency floor")

    train = sub.add_parser("train", help="train a labeler or classifier on the synthesized corpus")
    _common(train)
    train.add_argument("--scheme", choices=["labeling", "classification"])
    train.add_argument("--pooling", choices=["max", "mean", "last"])
    train.add_argument("--attention", choices=["linear", "tanh"])
    train.add_argument("--epochs", type=int)
    train.add_argument("--lr", type=float)
    train.add_argument("--clip", type=float)
    train.add_argument("--dropout", type=float)
    train.add_argument("--embed-dim", type=int)
    train.add_argument("--hidden-dim", type=int)
    train.add_argument("--layers", type=int)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--seed", type=int)
    train.add_argument("--threshold", type=float)
    train.add_argument("--dtype", choices=["float64", "float32"])
    train.add_argument("--checkpoint", help="output checkpoint (default: <data-dir>/model.ckpt)")
    train.add_argument("--no-progress", action="store_true", help="hide progress bars")

    evaluate = sub.add_parser("eval", help="metrics of a checkpoint on one split")
    _common(evaluate)
    evaluate.add_argument("--checkpoint")
    evaluate.add_argument("--split", choices=["train", "valid", "test"], default="test")
    evaluate.add_argument("--threshold", type=float)

    blank = sub.add_parser("blank", help="blank k tokens of a sentence")
    _common(blank)
    blank.add_argument("--checkpoint")
    blank.add_argument("--text", required=True)
    blank.add_argument("--k", type=int, default=1)

    inspect = sub.add_parser("inspect", help="summarize a checkpoint")
    _common(inspect)
    inspect.add_argument("--checkpoint")
    return parser


def parse_command(argv: Optional[Sequence[str]] = None) -> CommandSpec:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    mapping = {"synth": SYNTH_OVERRIDES, "train": TRAIN_OVERRIDES}.get(command, {})
    overrides = {dotted: args.pop(dest) for dest, dotted in mapping.items() if dest in args}
    data_dir = args.pop("data_dir") or settings.DATA_DIR
    return CommandSpec(
        command=command,
        config=args.pop("config"),
        data_dir=data_dir,
        log_level=args.pop("log_level"),
        overrides=overrides,
        options=args,
    )
