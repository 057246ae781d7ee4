# models/params.py
import logging
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from core.errors import ShapeError
from core.numcore import Tensor, parameter

logger = logging.getLogger(__name__)


class ParameterStore:
    """
    Named flat arrays for every learnable weight, with matching gradient slots.

    Insertion order is the canonical parameter order (checkpoint layout,
    gradient dicts, optimizer state).
    """

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._arrays: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}

    def add(self, name: str, shape: Tuple[int, ...]) -> np.ndarray:
        if name in self._arrays:
            raise ShapeError(f"parameter '{name}' declared twice")
        array = np.zeros(shape, dtype=self.dtype)
        self._arrays[name] = array
        self.grads[name] = np.zeros_like(array)
        return array

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        current = self._arrays[name]
        value = np.array(value, dtype=self.dtype, order="C")
        if value.shape != current.shape:
            raise ShapeError(f"parameter '{name}' has shape {current.shape}, got {value.shape}")
        self._arrays[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def names(self) -> List[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: array.shape for name, array in self._arrays.items()}

    @property
    def num_parameters(self) -> int:
        return int(sum(array.size for array in self._arrays.values()))

    def tensor(self, name: str) -> Tensor:
        """Leaf tensor for a parameter, tracked on the active tape if any."""
        return parameter(self._arrays[name], name)

    def set_grads(self, grads: Dict[str, np.ndarray]) -> None:
        for name, grad in grads.items():
            if name not in self._arrays:
                raise ShapeError(f"gradient for unknown parameter '{name}'")
            self.grads[name] = grad

    def fill_(self, value: float) -> "ParameterStore":
        for name, array in self._arrays.items():
            self._arrays[name] = np.full_like(array, value)
        return self

    def copy(self) -> "ParameterStore":
        clone = ParameterStore(self.dtype)
        for name, array in self._arrays.items():
            clone._arrays[name] = array.copy()
            clone.grads[name] = np.zeros_like(array)
        return clone

    def initialize(self, rng: np.random.Generator, scale: float = 0.08,
                   forget_bias: Optional[float] = 1.0) -> "ParameterStore":
        """
        Uniform(-scale, scale) for everything, embeddings included; the
        forget-gate slice of every LSTM bias is then set to ``forget_bias``.
        """
        for name, array in self._arrays.items():
            self._arrays[name] = rng.uniform(-scale, scale, size=array.shape).astype(self.dtype)
        if forget_bias is not None:
            for name, array in self._arrays.items():
                if name.startswith("encoder.") and name.endswith(".bias"):
                    hidden = array.shape[0] // 4
                    array[hidden:2 * hidden] = forget_bias
        return self
