"""
Neural building blocks over core.numcore tensors.

All blocks take batch-first inputs with any number of leading dimensions:
a sequence is (..., L, D) and a vector is (..., D). A single sentence is the
special case with no leading dimension.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ShapeError
from core.numcore import (Tensor, as_tensor, concat, linear, mul, reduce_max, reduce_mean,
                          reshape, sigmoid, softmax, stack, take, tanh)

logger = logging.getLogger(__name__)

# Row blocks of the gate matrices, top to bottom
GATE_ORDER = ("input", "forget", "cell", "output")
POOLING_MODES = ("max", "mean", "last")


@dataclass(frozen=True)
class LstmParams:
    w_input: Tensor   # (4H, E)
    w_hidden: Tensor  # (4H, H)
    bias: Tensor      # (4H,)

    def __post_init__(self):
        gates, hidden = self.w_hidden.shape
        if gates != 4 * hidden:
            raise ShapeError(f"hidden-to-gate matrix must be 4H x H, got {self.w_hidden.shape}")
        if self.w_input.ndim != 2 or self.w_input.shape[0] != gates:
            raise ShapeError(f"input-to-gate matrix must be 4H x E, got {self.w_input.shape}")
        if self.bias.shape != (gates,):
            raise ShapeError(f"gate bias must have length 4H={gates}, got {self.bias.shape}")

    @property
    def input_size(self) -> int:
        return self.w_input.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.w_hidden.shape[1]


@dataclass(frozen=True)
class AttentionParams:
    w: Tensor  # (A, 2 * 2H): mixes [h_i; summary]
    v: Tensor  # (A,)

    def __post_init__(self):
        if self.w.ndim != 2 or self.v.shape != (self.w.shape[0],) or self.w.shape[0] == 0:
            raise ShapeError(f"attention W {self.w.shape} and v {self.v.shape} are inconsistent")
        if self.w.shape[1] % 2:
            raise ShapeError("attention W must act on a concatenation of two equal halves")


@dataclass(frozen=True)
class EncodedSequence:
    """Per-token states h_i = [forward_i; backward_i], shape (..., L, 2H)."""

    states: Tensor

    @property
    def length(self) -> int:
        return self.states.shape[-2]

    @property
    def width(self) -> int:
        return self.states.shape[-1]


def embed(table: Tensor, ids) -> Tensor:
    return take(table, ids)


def _lstm_step(gate_inputs: Tensor, h_prev: Tensor, c_prev: Tensor, w_hidden: Tensor) -> Tuple[Tensor, Tensor]:
    hidden = w_hidden.shape[1]
    z = gate_inputs + linear(h_prev, w_hidden)
    i = sigmoid(z[..., :hidden])
    f = sigmoid(z[..., hidden:2 * hidden])
    g = tanh(z[..., 2 * hidden:3 * hidden])
    o = sigmoid(z[..., 3 * hidden:])
    c = f * c_prev + i * g
    h = o * tanh(c)
    return h, c


def lstm_cell(x, h_prev, c_prev, p: LstmParams) -> Tuple[Tensor, Tensor]:
    """One LSTM step: sigmoid input/forget/output gates, tanh candidate."""
    x, h_prev, c_prev = as_tensor(x), as_tensor(h_prev), as_tensor(c_prev)
    if x.shape[-1] != p.input_size:
        raise ShapeError(f"input width {x.shape[-1]} != E={p.input_size}")
    if h_prev.shape[-1] != p.hidden_size or c_prev.shape != h_prev.shape:
        raise ShapeError(f"state shapes {h_prev.shape}/{c_prev.shape} do not match H={p.hidden_size}")
    return _lstm_step(linear(x, p.w_input, p.bias), h_prev, c_prev, p.w_hidden)


def _run_direction(embedded: Tensor, p: LstmParams, reverse: bool) -> Tensor:
    length = embedded.shape[-2]
    # the input projection of every position is one matmul
    projected = linear(embedded, p.w_input, p.bias)
    zeros = np.zeros(embedded.shape[:-2] + (p.hidden_size,), dtype=embedded.dtype)
    h, c = Tensor(zeros), Tensor(zeros)
    outputs: List[Optional[Tensor]] = [None] * length
    steps = range(length - 1, -1, -1) if reverse else range(length)
    for t in steps:
        h, c = _lstm_step(projected[..., t, :], h, c, p.w_hidden)
        outputs[t] = h
    return stack(outputs, axis=-2)


def bilstm_encode(embedded, fw: LstmParams, bw: LstmParams) -> EncodedSequence:
    """Left-to-right and right-to-left passes from zero states, concatenated per token."""
    embedded = as_tensor(embedded)
    if embedded.ndim < 2 or embedded.shape[-2] == 0:
        raise ShapeError("bilstm_encode needs a nonempty sequence")
    if embedded.shape[-1] != fw.input_size or embedded.shape[-1] != bw.input_size:
        raise ShapeError(f"embedding width {embedded.shape[-1]} does not match the LSTM input size")
    forward = _run_direction(embedded, fw, reverse=False)
    backward = _run_direction(embedded, bw, reverse=True)
    return EncodedSequence(concat([forward, backward], axis=-1))


def dropout(x, p_drop: float, training: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """Inverted dropout; identity at inference time."""
    if not 0.0 <= p_drop < 1.0:
        raise ValueError(f"drop probability must be in [0, 1), got {p_drop}")
    x = as_tensor(x)
    if not training or p_drop == 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    keep = (rng.random(x.shape) >= p_drop).astype(x.dtype) / (1.0 - p_drop)
    return mul(x, keep)


def stacked_bilstm_encode(embedded, layers: Sequence[Tuple[LstmParams, LstmParams]], p_drop: float = 0.0,
                          training: bool = False, rng: Optional[np.random.Generator] = None) -> EncodedSequence:
    """
    Dropout on the embeddings, between layers, and on the final states.
    """
    states = dropout(embedded, p_drop, training, rng)
    encoded = None
    for depth, (fw, bw) in enumerate(layers):
        if depth:
            states = dropout(states, p_drop, training, rng)
        encoded = bilstm_encode(states, fw, bw)
        states = encoded.states
    if encoded is None:
        raise ShapeError("encoder needs at least one layer")
    return EncodedSequence(dropout(states, p_drop, training, rng))


def pool(enc: EncodedSequence, mode: str) -> Tensor:
    if mode == "max":
        return reduce_max(enc.states, axis=-2)
    if mode == "mean":
        return reduce_mean(enc.states, axis=-2)
    if mode == "last":
        return enc.states[..., -1, :]
    raise ValueError(f"unknown pooling mode '{mode}', expected one of {POOLING_MODES}")


def attention_scores(enc: EncodedSequence, summary, p: AttentionParams, activation: str = "linear") -> Tensor:
    """u_i = v . W[h_i; summary] (or v . tanh(W[h_i; summary])), shape (..., L)."""
    summary = as_tensor(summary)
    width = enc.width
    if p.w.shape[1] != 2 * width or summary.shape[-1] != width:
        raise ShapeError(f"attention W {p.w.shape} does not fit states of width {width}")
    if summary.shape[:-1] != enc.states.shape[:-2]:
        raise ShapeError(f"summary {summary.shape} does not match states {enc.states.shape}")
    attn_dim = p.w.shape[0]
    # W[h; s] = W_h h + W_s s, with the summary term broadcast over positions
    token_part = linear(enc.states, p.w[:, :width])
    summary_part = reshape(linear(summary, p.w[:, width:]), summary.shape[:-1] + (1, attn_dim))
    mixed = token_part + summary_part
    if activation == "tanh":
        mixed = tanh(mixed)
    elif activation != "linear":
        raise ValueError(f"unknown attention activation '{activation}'")
    scores = linear(mixed, reshape(p.v, (1, attn_dim)))
    return reshape(scores, scores.shape[:-1])


def attend(enc: EncodedSequence, summary, p: AttentionParams, activation: str = "linear") -> Tensor:
    """Distribution over the L positions of ``enc``."""
    return softmax(attention_scores(enc, summary, p, activation), axis=-1)
