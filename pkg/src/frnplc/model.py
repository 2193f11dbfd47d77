"""Frame-recurrent concealment network.

Per 20 ms frame the model runs three stages:

* encoder — projects the flattened real/imag frame to a working width, runs
  residual blocks (affine-norm + GRU over time, affine-norm + MLP over the
  feature axis), and projects back to the full complex frame;
* predictor — estimates the current magnitude spectrum from the *previous
  output* frame via a log-Mel front end, an LSTM, and a learned inverse-Mel
  head (exp, linear, absolute value), so its output is elementwise >= 0;
* joiner — stacks encoder real/imag and predicted magnitude into three
  channels and fuses them with two time-causal grouped convolutions.

The per-frame recurrence feeds each output frame back as the next predictor
input; the first frame sees a zero previous-output frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import nn
from .dsp import (LOG_FLOOR, ComplexSpectrogram, StftConfig, build_mel_filterbank,
                  istft, stft)
from .weights import ARCH_ID, WeightArchive, WeightArchiveError, default_metadata

# Squared-magnitude epsilon keeps sqrt gradients finite during training; at
# inference it perturbs magnitudes by at most ~1e-6.
MAG_EPS = 1e-12

# Joiner geometry: 3 stacked feature channels -> hidden -> 2 output channels,
# 3x3 kernels (freq x time), first layer grouped per input channel.
JOINER_HIDDEN_CHANNELS = 9
JOINER_KERNEL = (3, 3)
JOINER_GROUPS1 = 3

MODES = ("full", "encoder_only")


@dataclass(frozen=True)
class FrnConfig:
    """Network dimensions; defaults are the full-size 48 kHz configuration."""

    n_bins: int = 480
    dim: int = 384
    mlp_hidden: int = 768
    n_blocks: int = 4
    n_mels: int = 64
    predictor_hidden: int = 512

    def __post_init__(self) -> None:
        if min(self.n_bins, self.dim, self.mlp_hidden, self.n_blocks,
               self.n_mels, self.predictor_hidden) <= 0:
            raise ValueError("all model dimensions must be positive")

    def to_metadata(self) -> dict[str, str]:
        return {f"config.{k}": str(v) for k, v in vars(self).items()}

    @classmethod
    def from_metadata(cls, metadata: dict[str, str]) -> "FrnConfig":
        kwargs = {}
        for field_name in vars(cls()).keys():
            key = f"config.{field_name}"
            if key in metadata:
                kwargs[field_name] = int(metadata[key])
        return cls(**kwargs)


#: Reduced configuration for fast tests and format checks.
TINY_CONFIG = FrnConfig(n_bins=480, dim=48, mlp_hidden=96, n_blocks=2,
                        n_mels=16, predictor_hidden=64)


def weight_manifest(config: FrnConfig) -> dict[str, tuple[int, ...]]:
    """Canonical tensor-name -> shape map; the contract with any exporter."""
    two_f = 2 * config.n_bins
    d = config.dim
    m: dict[str, tuple[int, ...]] = {}
    m["encoder.proj_in.weight"] = (d, two_f)
    m["encoder.proj_in.bias"] = (d,)
    for k in range(config.n_blocks):
        p = f"encoder.block{k}."
        m[p + "rnn_norm.scale"] = (d,)
        m[p + "rnn_norm.bias"] = (d,)
        m[p + "gru.w_ih"] = (3 * d, d)
        m[p + "gru.w_hh"] = (3 * d, d)
        m[p + "gru.b_ih"] = (3 * d,)
        m[p + "gru.b_hh"] = (3 * d,)
        m[p + "mlp_norm.scale"] = (d,)
        m[p + "mlp_norm.bias"] = (d,)
        m[p + "mlp.fc1.weight"] = (config.mlp_hidden, d)
        m[p + "mlp.fc1.bias"] = (config.mlp_hidden,)
        m[p + "mlp.fc2.weight"] = (d, config.mlp_hidden)
        m[p + "mlp.fc2.bias"] = (d,)
    m["encoder.proj_out.weight"] = (two_f, d)
    m["encoder.proj_out.bias"] = (two_f,)
    h = config.predictor_hidden
    m["predictor.lstm.w_ih"] = (4 * h, config.n_mels)
    m["predictor.lstm.w_hh"] = (4 * h, h)
    m["predictor.lstm.b_ih"] = (4 * h,)
    m["predictor.lstm.b_hh"] = (4 * h,)
    m["predictor.to_mel.weight"] = (config.n_mels, h)
    m["predictor.to_mel.bias"] = (config.n_mels,)
    m["predictor.inv_mel.weight"] = (config.n_bins, config.n_mels)
    m["predictor.inv_mel.bias"] = (config.n_bins,)
    kf, kt = JOINER_KERNEL
    m["joiner.conv1.weight"] = (JOINER_HIDDEN_CHANNELS, 3 // JOINER_GROUPS1, kf, kt)
    m["joiner.conv1.bias"] = (JOINER_HIDDEN_CHANNELS,)
    m["joiner.conv2.weight"] = (2, JOINER_HIDDEN_CHANNELS, kf, kt)
    m["joiner.conv2.bias"] = (2,)
    return m


def parameter_count(config: FrnConfig) -> int:
    """Closed-form parameter count; must equal the manifest tensor sizes."""
    two_f = 2 * config.n_bins
    d, mh = config.dim, config.mlp_hidden
    block = (2 * d) + (2 * 3 * d * d + 2 * 3 * d) + (2 * d) \
        + (mh * d + mh + d * mh + d)
    encoder = (d * two_f + d) + config.n_blocks * block + (two_f * d + two_f)
    h = config.predictor_hidden
    predictor = (4 * h * config.n_mels + 4 * h * h + 8 * h) \
        + (config.n_mels * h + config.n_mels) \
        + (config.n_bins * config.n_mels + config.n_bins)
    kf, kt = JOINER_KERNEL
    joiner = JOINER_HIDDEN_CHANNELS * (3 // JOINER_GROUPS1) * kf * kt + JOINER_HIDDEN_CHANNELS \
        + 2 * JOINER_HIDDEN_CHANNELS * kf * kt + 2
    return encoder + predictor + joiner


def random_archive(config: FrnConfig | None = None, seed: int = 0,
                   stft_config: StftConfig | None = None) -> WeightArchive:
    """Random-init archive: N(0, 1/fan_in) matrices, zero biases, unit affines."""
    config = config or FrnConfig()
    stft_config = stft_config or StftConfig()
    rng = np.random.default_rng(seed)
    entries: dict[str, np.ndarray] = {}
    for name, shape in weight_manifest(config).items():
        if name.endswith(".scale"):
            entries[name] = np.ones(shape, dtype=np.float32)
        elif len(shape) == 1:
            entries[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            entries[name] = rng.standard_normal(shape).astype(np.float32) / np.sqrt(fan_in)
    meta = default_metadata(config.to_metadata())
    meta["seed"] = str(seed)
    meta["sample_rate"] = str(stft_config.sample_rate)
    return WeightArchive(entries=entries, metadata=meta)


def zero_archive(config: FrnConfig | None = None) -> WeightArchive:
    """All-zero archive (including affine scales); the degenerate bias-free net."""
    config = config or FrnConfig()
    entries = {name: np.zeros(shape, dtype=np.float32)
               for name, shape in weight_manifest(config).items()}
    return WeightArchive(entries=entries, metadata=default_metadata(config.to_metadata()))


@dataclass
class EncoderState:
    hidden: list[np.ndarray]  # one (dim,) vector per residual block


@dataclass
class PredictorState:
    h: np.ndarray
    c: np.ndarray


@dataclass
class FrnState:
    encoder: EncoderState
    predictor: PredictorState
    prev_output: np.ndarray       # (2, F) previous output frame, zeros at start
    joiner_ctx_in: np.ndarray     # (3, F, kt-1) past stacked joiner inputs
    joiner_ctx_mid: np.ndarray    # (hidden, F, kt-1) past first-conv outputs


@dataclass(frozen=True)
class _Affine:
    scale: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class _Linear:
    weight: np.ndarray
    bias: np.ndarray


@dataclass(frozen=True)
class _EncoderBlock:
    rnn_norm: _Affine
    gru: nn.GruParams
    mlp_norm: _Affine
    fc1: _Linear
    fc2: _Linear


def _conv_step(window: np.ndarray, weight: np.ndarray, bias: np.ndarray,
               groups: int) -> np.ndarray:
    """Valid grouped conv over one causal time window: (C_in, F, kt) -> (C_out, F)."""
    c_out, c_per_group, k_freq, k_time = weight.shape
    pad_f = (k_freq - 1) // 2
    padded = np.pad(window, ((0, 0), (pad_f, pad_f), (0, 0)))
    # (C_in, F, kt, kf) frequency windows
    views = sliding_window_view(padded, k_freq, axis=1)
    out_per_group = c_out // groups
    pieces = []
    for g in range(groups):
        v = views[g * c_per_group : (g + 1) * c_per_group]
        w = weight[g * out_per_group : (g + 1) * out_per_group]
        pieces.append(np.einsum("cftk,ockt->of", v, w, optimize=True))
    out = np.concatenate(pieces, axis=0) + bias[:, None]
    return out.astype(np.float32, copy=False)


class FrnModel:
    """Inference-side network bound to one weight archive.

    Weights are immutable and shareable across threads; each stream owns its
    :class:`FrnState` and advances it one frame at a time.
    """

    def __init__(self, archive: WeightArchive, stft_config: StftConfig | None = None):
        if archive.metadata.get("arch") != ARCH_ID:
            raise WeightArchiveError(
                f"archive arch {archive.metadata.get('arch')!r} is not {ARCH_ID!r}")
        self.stft_config = stft_config or StftConfig()
        self.config = FrnConfig.from_metadata(archive.metadata)
        if self.config.n_bins != self.stft_config.model_bins:
            raise WeightArchiveError(
                f"archive bin count {self.config.n_bins} does not match "
                f"transform bins {self.stft_config.model_bins}")
        manifest = weight_manifest(self.config)
        for name, shape in manifest.items():
            tensor = archive.require(name)
            if tensor.shape != shape:
                raise WeightArchiveError(
                    f"tensor {name!r} has shape {tensor.shape}, expected {shape}")
        unexpected = set(archive.entries) - set(manifest)
        if unexpected:
            raise WeightArchiveError(f"unexpected tensors: {sorted(unexpected)}")
        self.archive = archive

        get = archive.require
        self._proj_in = _Linear(get("encoder.proj_in.weight"), get("encoder.proj_in.bias"))
        self._proj_out = _Linear(get("encoder.proj_out.weight"), get("encoder.proj_out.bias"))
        self._blocks: list[_EncoderBlock] = []
        for k in range(self.config.n_blocks):
            p = f"encoder.block{k}."
            self._blocks.append(_EncoderBlock(
                rnn_norm=_Affine(get(p + "rnn_norm.scale"), get(p + "rnn_norm.bias")),
                gru=nn.GruParams(get(p + "gru.w_ih"), get(p + "gru.w_hh"),
                                 get(p + "gru.b_ih"), get(p + "gru.b_hh")),
                mlp_norm=_Affine(get(p + "mlp_norm.scale"), get(p + "mlp_norm.bias")),
                fc1=_Linear(get(p + "mlp.fc1.weight"), get(p + "mlp.fc1.bias")),
                fc2=_Linear(get(p + "mlp.fc2.weight"), get(p + "mlp.fc2.bias")),
            ))
        self._lstm = nn.LstmParams(get("predictor.lstm.w_ih"), get("predictor.lstm.w_hh"),
                                   get("predictor.lstm.b_ih"), get("predictor.lstm.b_hh"))
        self._to_mel = _Linear(get("predictor.to_mel.weight"), get("predictor.to_mel.bias"))
        self._inv_mel = _Linear(get("predictor.inv_mel.weight"), get("predictor.inv_mel.bias"))
        self._conv1_w = get("joiner.conv1.weight")
        self._conv1_b = get("joiner.conv1.bias")
        self._conv2_w = get("joiner.conv2.weight")
        self._conv2_b = get("joiner.conv2.bias")
        self._mel = build_mel_filterbank(self.config.n_mels, self.stft_config) \
            .weights.astype(np.float32)

    # ---- state -----------------------------------------------------------

    def new_state(self) -> FrnState:
        cfg = self.config
        kt = JOINER_KERNEL[1]
        return FrnState(
            encoder=EncoderState([np.zeros(cfg.dim, dtype=np.float32)
                                  for _ in range(cfg.n_blocks)]),
            predictor=PredictorState(np.zeros(cfg.predictor_hidden, dtype=np.float32),
                                     np.zeros(cfg.predictor_hidden, dtype=np.float32)),
            prev_output=np.zeros((2, cfg.n_bins), dtype=np.float32),
            joiner_ctx_in=np.zeros((3, cfg.n_bins, kt - 1), dtype=np.float32),
            joiner_ctx_mid=np.zeros((JOINER_HIDDEN_CHANNELS, cfg.n_bins, kt - 1),
                                    dtype=np.float32),
        )

    def n_parameters(self) -> int:
        return self.archive.n_parameters()

    # ---- submodule steps ---------------------------------------------------

    def encoder_step(self, frame_flat: np.ndarray,
                     state: EncoderState) -> tuple[np.ndarray, EncoderState]:
        """One encoder update on the flattened (2F,) real/imag frame."""
        frame_flat = np.asarray(frame_flat, dtype=np.float32)
        if frame_flat.shape != (2 * self.config.n_bins,):
            raise ValueError(f"expected frame of length {2 * self.config.n_bins}")
        if not np.all(np.isfinite(frame_flat)):
            raise ValueError("non-finite frame")
        x = nn.gelu(nn.linear(frame_flat, self._proj_in.weight, self._proj_in.bias))
        hidden_next: list[np.ndarray] = []
        for block, h in zip(self._blocks, state.hidden):
            r = nn.affine_norm(x, block.rnn_norm.scale, block.rnn_norm.bias)
            out, h_next = nn.gru_step(r, h, block.gru)
            hidden_next.append(h_next)
            x = x + out
            m = nn.affine_norm(x, block.mlp_norm.scale, block.mlp_norm.bias)
            m = nn.linear(nn.gelu(nn.linear(m, block.fc1.weight, block.fc1.bias)),
                          block.fc2.weight, block.fc2.bias)
            x = x + m
        out_flat = nn.linear(x, self._proj_out.weight, self._proj_out.bias)
        return out_flat, EncoderState(hidden_next)

    def predictor_step(self, prev_frame: np.ndarray,
                       state: PredictorState) -> tuple[np.ndarray, PredictorState]:
        """Magnitude prediction from the previous complex output frame; output >= 0."""
        prev_frame = np.asarray(prev_frame, dtype=np.float32)
        if prev_frame.shape != (2, self.config.n_bins):
            raise ValueError(f"expected previous frame of shape (2, {self.config.n_bins})")
        if not np.all(np.isfinite(prev_frame)):
            raise ValueError("non-finite frame")
        mag = np.sqrt(prev_frame[0] * prev_frame[0]
                      + prev_frame[1] * prev_frame[1]
                      + np.float32(MAG_EPS))
        feat = np.log(self._mel @ mag + np.float32(LOG_FLOOR))
        out, (h, c) = nn.lstm_step(feat, (state.h, state.c), self._lstm)
        mel_mag = np.exp(nn.linear(out, self._to_mel.weight, self._to_mel.bias))
        pred = np.abs(nn.linear(mel_mag, self._inv_mel.weight, self._inv_mel.bias))
        return pred, PredictorState(h, c)

    def joiner_step(self, enc_frame: np.ndarray, pred_mag: np.ndarray,
                    ctx_in: np.ndarray, ctx_mid: np.ndarray
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Fuse one frame; returns (output (2, F), new ctx_in, new ctx_mid)."""
        f = self.config.n_bins
        if enc_frame.shape != (2, f) or pred_mag.shape != (f,):
            raise ValueError("joiner inputs must be (2, F) and (F,)")
        stacked = np.empty((3, f, 1), dtype=np.float32)
        stacked[0, :, 0] = enc_frame[0]
        stacked[1, :, 0] = enc_frame[1]
        stacked[2, :, 0] = pred_mag
        window1 = np.concatenate([ctx_in, stacked], axis=2)
        mid = _conv_step(window1, self._conv1_w, self._conv1_b, JOINER_GROUPS1)
        window2 = np.concatenate([ctx_mid, mid[:, :, None]], axis=2)
        out = _conv_step(window2, self._conv2_w, self._conv2_b, 1)
        return out, window1[:, :, 1:], window2[:, :, 1:]

    # ---- full per-frame recurrence ----------------------------------------

    def step(self, frame: np.ndarray, state: FrnState,
             mode: str = "full") -> tuple[np.ndarray, FrnState]:
        """Process one (2, F) complex frame; returns (output frame, next state)."""
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        frame = np.asarray(frame, dtype=np.float32)
        if frame.shape != (2, self.config.n_bins):
            raise ValueError(f"expected frame of shape (2, {self.config.n_bins})")
        enc_flat, enc_state = self.encoder_step(frame.reshape(-1), state.encoder)
        enc_frame = enc_flat.reshape(2, self.config.n_bins)
        if mode == "encoder_only":
            out = enc_frame
            next_state = FrnState(enc_state, state.predictor, out,
                                  state.joiner_ctx_in, state.joiner_ctx_mid)
            return out, next_state
        pred, pred_state = self.predictor_step(state.prev_output, state.predictor)
        out, ctx_in, ctx_mid = self.joiner_step(enc_frame, pred,
                                                state.joiner_ctx_in, state.joiner_ctx_mid)
        return out, FrnState(enc_state, pred_state, out, ctx_in, ctx_mid)


# ---- whole-utterance helpers ------------------------------------------------


def frames_from_spectrogram(spec: ComplexSpectrogram) -> np.ndarray:
    """Model-facing frames (T, 2, F): one-sided spectrum minus the Nyquist row."""
    f = spec.config.model_bins
    return np.stack([spec.real[:f].T, spec.imag[:f].T], axis=1).astype(np.float32)


def spectrogram_from_frames(frames: np.ndarray,
                            config: StftConfig) -> ComplexSpectrogram:
    """Reattach a zero Nyquist row and restore the (bins, T) layout."""
    n_frames = frames.shape[0]
    real = np.zeros((config.n_bins, n_frames))
    imag = np.zeros((config.n_bins, n_frames))
    real[: config.model_bins] = frames[:, 0, :].T
    imag[: config.model_bins] = frames[:, 1, :].T
    return ComplexSpectrogram(real, imag, config)


def forward_frames(model: FrnModel, frames: np.ndarray, mode: str = "full",
                   state: FrnState | None = None) -> np.ndarray:
    """Run the per-frame recurrence over (T, 2, F) frames from a fresh state."""
    state = state or model.new_state()
    out = np.empty_like(frames)
    for t in range(frames.shape[0]):
        out[t], state = model.step(frames[t], state, mode=mode)
    return out


def conceal_utterance(model: FrnModel, signal: np.ndarray,
                      mode: str = "full") -> np.ndarray:
    """Analyze, conceal frame by frame, and resynthesize one utterance."""
    spec = stft(signal, model.stft_config)
    frames = frames_from_spectrogram(spec)
    out_frames = forward_frames(model, frames, mode=mode)
    return istft(spectrogram_from_frames(out_frames, model.stft_config))
