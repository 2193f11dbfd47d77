"""Forward-pass primitives: affine maps, activations, recurrent cells, causal conv.

All operations are pure and deterministic. Parameter containers are immutable
after construction; recurrent state vectors are owned by the caller. Inference
arithmetic is 32-bit float whenever the inputs are.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf, expit

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def linear(x: np.ndarray, weight: np.ndarray, bias: np.ndarray | None = None) -> np.ndarray:
    """Affine map along the trailing dimension; ``weight`` is (out, in)."""
    if x.shape[-1] != weight.shape[1]:
        raise ValueError(f"trailing dim {x.shape[-1]} does not match weight in-dim {weight.shape[1]}")
    y = x @ weight.T
    if bias is not None:
        y = y + bias
    return y


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact Gaussian-CDF GELU, x * Phi(x)."""
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    return x * 0.5 * (1.0 + erf(x * x.dtype.type(_INV_SQRT2)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    # expit saturates without overflow warnings on extreme inputs.
    return expit(x)


def affine_norm(x: np.ndarray, scale: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Elementwise scale-and-shift along the trailing dimension."""
    if x.shape[-1] != scale.shape[-1] or scale.shape != bias.shape:
        raise ValueError("scale/bias must match the trailing dimension")
    return x * scale + bias


@dataclass(frozen=True)
class LstmParams:
    """Single LSTM cell. Gate rows are stacked [input, forget, cell, output]."""

    w_ih: np.ndarray  # (4*hidden, input)
    w_hh: np.ndarray  # (4*hidden, hidden)
    b_ih: np.ndarray  # (4*hidden,)
    b_hh: np.ndarray  # (4*hidden,)

    def __post_init__(self) -> None:
        h = self.hidden_size
        if self.w_ih.shape[0] != 4 * h or self.w_hh.shape != (4 * h, h):
            raise ValueError("LSTM parameter shapes inconsistent")
        if self.b_ih.shape != (4 * h,) or self.b_hh.shape != (4 * h,):
            raise ValueError("LSTM bias shapes inconsistent")

    @property
    def hidden_size(self) -> int:
        return self.w_hh.shape[1]

    @property
    def input_size(self) -> int:
        return self.w_ih.shape[1]


@dataclass(frozen=True)
class GruParams:
    """Single GRU cell. Gate rows are stacked [reset, update, new]; the new
    gate applies the reset factor to the hidden matmul term."""

    w_ih: np.ndarray  # (3*hidden, input)
    w_hh: np.ndarray  # (3*hidden, hidden)
    b_ih: np.ndarray  # (3*hidden,)
    b_hh: np.ndarray  # (3*hidden,)

    def __post_init__(self) -> None:
        h = self.hidden_size
        if self.w_ih.shape[0] != 3 * h or self.w_hh.shape != (3 * h, h):
            raise ValueError("GRU parameter shapes inconsistent")
        if self.b_ih.shape != (3 * h,) or self.b_hh.shape != (3 * h,):
            raise ValueError("GRU bias shapes inconsistent")

    @property
    def hidden_size(self) -> int:
        return self.w_hh.shape[1]

    @property
    def input_size(self) -> int:
        return self.w_ih.shape[1]


def lstm_step(x: np.ndarray, state: tuple[np.ndarray, np.ndarray],
              params: LstmParams) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """One LSTM update; returns (output, (h, c))."""
    h, c = state
    n = params.hidden_size
    if x.shape != (params.input_size,) or h.shape != (n,) or c.shape != (n,):
        raise ValueError("LSTM input/state shapes do not match parameters")
    gates = params.w_ih @ x + params.b_ih + params.w_hh @ h + params.b_hh
    i = sigmoid(gates[:n])
    f = sigmoid(gates[n : 2 * n])
    g = np.tanh(gates[2 * n : 3 * n])
    o = sigmoid(gates[3 * n :])
    c_next = f * c + i * g
    h_next = o * np.tanh(c_next)
    return h_next, (h_next, c_next)


def gru_step(x: np.ndarray, h: np.ndarray, params: GruParams) -> tuple[np.ndarray, np.ndarray]:
    """One GRU update; returns (output, h)."""
    n = params.hidden_size
    if x.shape != (params.input_size,) or h.shape != (n,):
        raise ValueError("GRU input/state shapes do not match parameters")
    gi = params.w_ih @ x + params.b_ih
    gh = params.w_hh @ h + params.b_hh
    r = sigmoid(gi[:n] + gh[:n])
    z = sigmoid(gi[n : 2 * n] + gh[n : 2 * n])
    new = np.tanh(gi[2 * n :] + r * gh[2 * n :])
    h_next = (1.0 - z) * new + z * h
    return h_next, h_next


def causal_grouped_conv2d(x: np.ndarray, weight: np.ndarray,
                          bias: np.ndarray | None = None, groups: int = 1) -> np.ndarray:
    """Grouped 2-D convolution over (freq, time), causal along time.

    ``x`` is (C_in, F, T) and ``weight`` is (C_out, C_in/groups, kF, kT).
    The frequency axis is zero-padded symmetrically (kF must be odd); the
    time axis is zero-padded on the past side only, so output frame t
    depends only on input frames <= t.
    """
    c_in, n_freq, n_time = x.shape
    c_out, c_per_group, k_freq, k_time = weight.shape
    if c_in % groups or c_out % groups:
        raise ValueError("channel counts must be divisible by groups")
    if c_per_group != c_in // groups:
        raise ValueError("weight group width does not match input channels")
    if k_freq % 2 == 0:
        raise ValueError("frequency kernel size must be odd for symmetric padding")
    pad_f = (k_freq - 1) // 2
    xp = np.pad(x, ((0, 0), (pad_f, pad_f), (k_time - 1, 0)))
    out = np.zeros((c_out, n_freq, n_time), dtype=np.result_type(x, weight))
    out_per_group = c_out // groups
    for o in range(c_out):
        g = o // out_per_group
        acc = out[o]
        for ci in range(c_per_group):
            plane = xp[g * c_per_group + ci]
            for df in range(k_freq):
                for dt in range(k_time):
                    acc += weight[o, ci, df, dt] * plane[df : df + n_freq, dt : dt + n_time]
    if bias is not None:
        out += bias[:, None, None]
    return out
