# services/optim.py
"""
Adam with bias correction and global-norm gradient clipping.

Gradients are dicts keyed by parameter name, aligned with a ParameterStore.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from core.config import OptimizerConfig
from core.errors import NonFiniteError, ShapeError
from models.params import ParameterStore

logger = logging.getLogger(__name__)

Grads = Dict[str, np.ndarray]


@dataclass
class AdamState:
    config: OptimizerConfig = field(default_factory=OptimizerConfig)
    m: Grads = field(default_factory=dict)
    v: Grads = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_store(cls, store: ParameterStore, config: OptimizerConfig = None) -> "AdamState":
        return cls(
            config=config or OptimizerConfig(),
            m={name: np.zeros_like(array) for name, array in store.items()},
            v={name: np.zeros_like(array) for name, array in store.items()},
        )


def global_norm(grads: Grads) -> float:
    """L2 norm over every gradient entry; names the first non-finite gradient."""
    total = 0.0
    for name, grad in grads.items():
        if not np.isfinite(grad).all():
            raise NonFiniteError(f"non-finite gradient for parameter '{name}'")
        total += float(np.sum(np.square(grad, dtype=np.float64)))
    return math.sqrt(total)


def clip_global_norm(grads: Grads, max_norm: float = 5.0) -> Grads:
    if max_norm <= 0:
        raise ValueError(f"max_norm must be positive, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    logger.debug(f"clipping gradients: norm {norm:.4f} -> {max_norm}")
    return {name: grad * np.asarray(scale, dtype=grad.dtype) for name, grad in grads.items()}


def adam_step(store: ParameterStore, grads: Grads, state: AdamState) -> AdamState:
    """
    One bias-corrected Adam update. Parameter arrays are replaced rather
    than written in place so tensors from earlier steps keep their values.
    """
    cfg = state.config
    if set(grads) != set(store.names()):
        raise ShapeError("gradients do not cover exactly the stored parameters")
    state.t += 1
    correction1 = 1.0 - cfg.beta1 ** state.t
    correction2 = 1.0 - cfg.beta2 ** state.t
    for name in store.names():
        grad = grads[name]
        if grad.shape != store[name].shape:
            raise ShapeError(f"gradient for '{name}' has shape {grad.shape}, expected {store[name].shape}")
        m = cfg.beta1 * state.m[name] + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * state.v[name] + (1.0 - cfg.beta2) * grad * grad
        state.m[name], state.v[name] = m, v
        step = cfg.lr * (m / correction1) / (np.sqrt(v / correction2) + cfg.eps)
        store[name] = store[name] - step
    return state
