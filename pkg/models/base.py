# models/base.py
import logging
from typing import ClassVar, List, Optional, Tuple

import numpy as np

from core.config import ModelConfig
from core.errors import ShapeError, VocabularyError
from core.nn import EncodedSequence, LstmParams, embed, stacked_bilstm_encode
from core.numcore import Tensor
from models.params import ParameterStore

logger = logging.getLogger(__name__)

DIRECTIONS = ("fw", "bw")


class BlankModel:
    """
    Shared embedding + stacked biLSTM encoder of both blanking schemes.

    Token ids may be one sentence (L,) or an equal-length batch (B, L);
    outputs keep the same leading dimensions.
    """

    scheme: ClassVar[str] = ""

    def __init__(self, config: ModelConfig, vocab_size: int, params: Optional[ParameterStore] = None,
                 seed: Optional[int] = None, dtype=np.float64):
        if config.scheme != self.scheme:
            raise ValueError(f"{type(self).__name__} needs scheme '{self.scheme}', got '{config.scheme}'")
        if vocab_size < 1:
            raise VocabularyError("vocabulary must not be empty")
        self.config = config
        self.vocab_size = vocab_size
        expected = self.declare(ParameterStore(dtype if params is None else params.dtype))
        if params is None:
            params = expected.initialize(np.random.default_rng(seed), config.init_scale, config.forget_bias)
        elif params.shapes() != expected.shapes():
            raise ShapeError(f"parameter layout does not match a {self.scheme} model with this config")
        self.params = params

    # ---------- Parameters ---------- #

    def declare(self, store: ParameterStore) -> ParameterStore:
        cfg = self.config
        hidden = cfg.hidden_dim
        store.add("embedding", (self.vocab_size, cfg.embed_dim))
        for layer in range(cfg.num_layers):
            width = cfg.embed_dim if layer == 0 else 2 * hidden
            for direction in DIRECTIONS:
                prefix = f"encoder.{layer}.{direction}"
                store.add(f"{prefix}.w_input", (4 * hidden, width))
                store.add(f"{prefix}.w_hidden", (4 * hidden, hidden))
                store.add(f"{prefix}.bias", (4 * hidden,))
        self.declare_head(store)
        return store

    def declare_head(self, store: ParameterStore) -> None:
        raise NotImplementedError

    def _lstm(self, layer: int, direction: str) -> LstmParams:
        prefix = f"encoder.{layer}.{direction}"
        return LstmParams(
            w_input=self.params.tensor(f"{prefix}.w_input"),
            w_hidden=self.params.tensor(f"{prefix}.w_hidden"),
            bias=self.params.tensor(f"{prefix}.bias"),
        )

    def encoder_layers(self) -> List[Tuple[LstmParams, LstmParams]]:
        return [(self._lstm(layer, "fw"), self._lstm(layer, "bw")) for layer in range(self.config.num_layers)]

    # ---------- Forward ---------- #

    def check_ids(self, tokens) -> np.ndarray:
        ids = np.asarray(tokens, dtype=np.int64)
        if ids.ndim not in (1, 2) or ids.shape[-1] == 0:
            raise ShapeError(f"expected a nonempty sentence or batch of sentences, got shape {ids.shape}")
        if ids.min() < 0 or ids.max() >= self.vocab_size:
            raise VocabularyError(f"token id out of vocabulary range [0, {self.vocab_size})")
        return ids

    def encode(self, ids: np.ndarray, training: bool = False,
               rng: Optional[np.random.Generator] = None) -> EncodedSequence:
        embedded = embed(self.params.tensor("embedding"), ids)
        return stacked_bilstm_encode(embedded, self.encoder_layers(), self.config.dropout, training, rng)

    def forward(self, tokens, training: bool = False, rng: Optional[np.random.Generator] = None):
        raise NotImplementedError

    def loss(self, tokens, blanks, training: bool = False, rng: Optional[np.random.Generator] = None,
             reduction: str = "mean") -> Tensor:
        raise NotImplementedError

    def blank_scores(self, tokens) -> np.ndarray:
        """Per-position scores whose argmax is the predicted blank (inference mode)."""
        raise NotImplementedError


def reduce_sentences(per_sentence: Tensor, reduction: str) -> Tensor:
    if reduction == "mean":
        return per_sentence.mean()
    if reduction == "sum":
        return per_sentence.sum()
    raise ValueError(f"unknown reduction '{reduction}'")
