"""Central finite-difference oracle for tape gradients."""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

from core.numcore import Tape, Tensor

logger = logging.getLogger(__name__)


@dataclass
class GradientReport:
    max_error: Dict[str, float] = field(default_factory=dict)
    rtol: float = 1e-4

    @property
    def ok(self) -> bool:
        return all(err <= self.rtol for err in self.max_error.values())

    @property
    def worst(self) -> float:
        return max(self.max_error.values(), default=0.0)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """|a - n| / max(|a|, |n|, floor); the floor keeps near-zero entries meaningful."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def numerical_gradient(loss_fn: Callable[[], float], array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Perturb ``array`` in place one entry at a time; it is restored afterwards."""
    grad = np.zeros_like(array, dtype=np.float64)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        plus = loss_fn()
        flat[i] = old - h
        minus = loss_fn()
        flat[i] = old
        out[i] = (plus - minus) / (2.0 * h)
    return grad


def check_gradients(loss_fn: Callable[[], Tensor], store, h: float = 1e-5, rtol: float = 1e-4) -> GradientReport:
    """
    Compare tape gradients of ``loss_fn`` with central differences for
    every parameter in ``store``. ``loss_fn`` must rebuild the loss from the
    store's current arrays and be deterministic.
    """
    with Tape() as tape:
        loss = loss_fn()
    analytic = tape.backward(loss, store)

    def value() -> float:
        return loss_fn().item()

    report = GradientReport(rtol=rtol)
    for name, array in store.items():
        numeric = numerical_gradient(value, array, h)
        report.max_error[name] = float(relative_error(analytic[name], numeric).max(initial=0.0))
        logger.debug(f"gradcheck {name}: max relative error {report.max_error[name]:.2e}")
    return report
