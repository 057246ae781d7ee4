"""Exception hierarchy shared by every package.

Library code raises these; only the command line turns them into
``{"status": "error", "error_type": ..., "message": ...}`` payloads.
"""
from typing import Any, List, Optional


class ClozeGenError(Exception):
    """Base class for all project errors."""

    error_type = "CLOZEGEN_ERROR"


class ShapeError(ClozeGenError, ValueError):
    error_type = "SHAPE_ERROR"


class NonFiniteError(ClozeGenError, ArithmeticError):
    """A NaN or infinity appeared in an array or gradient."""

    error_type = "NON_FINITE"


class TargetRangeError(ClozeGenError, IndexError):
    error_type = "TARGET_RANGE"


class VocabularyError(ClozeGenError, IndexError):
    error_type = "VOCABULARY_ERROR"


class CorpusError(ClozeGenError, ValueError):
    error_type = "CORPUS_ERROR"


class DistributionError(ClozeGenError, ValueError):
    error_type = "DISTRIBUTION_ERROR"


class RuleError(ClozeGenError, ValueError):
    error_type = "RULE_ERROR"


class UsageError(ClozeGenError, ValueError):
    """Bad command line: unknown flag or choice, missing argument, empty input."""

    error_type = "USAGE_ERROR"


class DivergenceError(ClozeGenError):
    """Training produced a non-finite loss; the last good checkpoint is kept."""

    error_type = "DIVERGENCE"

    def __init__(self, message: str, checkpoint: Optional[Any] = None, history: Optional[List[Any]] = None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.history = history or []


class CheckpointError(ClozeGenError, ValueError):
    error_type = "CHECKPOINT_ERROR"


class CheckpointVersionError(CheckpointError):
    error_type = "CHECKPOINT_VERSION"


class CorruptCheckpointError(CheckpointError):
    error_type = "CHECKPOINT_CORRUPT"


class CheckpointShapeError(CheckpointError):
    error_type = "CHECKPOINT_SHAPE"


def error_payload(exc: BaseException) -> dict:
    """Render an exception as the status dict every command prints on failure."""
    return {
        "status": "error",
        "error_type": getattr(exc, "error_type", type(exc).__name__.upper()),
        "message": str(exc),
    }
