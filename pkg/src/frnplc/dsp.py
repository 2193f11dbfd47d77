"""Deterministic signal primitives: framed Fourier analysis/synthesis and Mel features.

Everything here is a pure function of its inputs. The analysis/synthesis pair
uses a periodic Hann window on both sides with weighted overlap-add
normalization, so ``istft(stft(x))`` reconstructs the interior of ``x`` to
machine precision. No centering or lookahead padding is applied: the first
frame covers samples ``[0, win_length)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SAMPLE_RATE = 48_000
LOG_FLOOR = 1e-8
# The accumulated squared synthesis window never drops below 0.5 where two
# frames overlap (Hann at 50%), so flooring the normalizer there leaves the
# interior exact while bounding the gain at partially covered edges; dividing
# by the raw edge sums would amplify inconsistent frames by up to 1e10.
WSUM_FLOOR = 0.5


def hann_periodic(length: int) -> np.ndarray:
    """Periodic (DFT-even) Hann window."""
    n = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)


@dataclass(frozen=True)
class StftConfig:
    """Framing for the analysis/synthesis pair; defaults are 20 ms windows at 48 kHz."""

    fft_size: int = 960
    win_length: int = 960
    hop_length: int = 480
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        if min(self.fft_size, self.win_length, self.hop_length, self.sample_rate) <= 0:
            raise ValueError("all framing parameters must be positive")
        if 2 * self.hop_length != self.win_length:
            raise ValueError("hop_length must equal win_length/2 for the synthesis pair")
        if self.fft_size < self.win_length:
            raise ValueError("fft_size must be >= win_length")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def model_bins(self) -> int:
        # One-sided spectrum with the Nyquist bin dropped.
        return self.fft_size // 2

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.win_length:
            return 0
        return (n_samples - self.win_length) // self.hop_length + 1


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Complex time-frequency representation, stored as real/imag matrices (bins, frames)."""

    real: np.ndarray
    imag: np.ndarray
    config: StftConfig

    def __post_init__(self) -> None:
        if self.real.shape != self.imag.shape:
            raise ValueError("real/imag shape mismatch")
        if self.real.ndim != 2 or self.real.shape[0] != self.config.n_bins:
            raise ValueError(
                f"expected {self.config.n_bins} frequency rows, got shape {self.real.shape}"
            )

    @property
    def n_frames(self) -> int:
        return self.real.shape[1]

    def to_complex(self) -> np.ndarray:
        return self.real + 1j * self.imag


def _frame(signal: np.ndarray, win_length: int, hop_length: int) -> np.ndarray:
    """Slice a 1-D signal into (n_frames, win_length) rows; no padding."""
    n_frames = (len(signal) - win_length) // hop_length + 1
    idx = hop_length * np.arange(n_frames)[:, None] + np.arange(win_length)[None, :]
    return signal[idx]


def stft(signal: np.ndarray, config: StftConfig | None = None) -> ComplexSpectrogram:
    """Windowed one-sided FFT of every full analysis frame."""
    cfg = config or StftConfig()
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    if len(signal) < cfg.win_length:
        raise ValueError("insufficient samples: signal shorter than one window")
    frames = _frame(signal, cfg.win_length, cfg.hop_length) * hann_periodic(cfg.win_length)
    spec = np.fft.rfft(frames, n=cfg.fft_size, axis=1).T
    return ComplexSpectrogram(np.ascontiguousarray(spec.real),
                              np.ascontiguousarray(spec.imag), cfg)


def istft(spec: ComplexSpectrogram) -> np.ndarray:
    """Weighted overlap-add synthesis, the inverse of :func:`stft` on frame interiors.

    Interior samples (covered by two frames) reconstruct exactly; the first
    and last half-window fade in/out under the floored normalizer instead of
    being amplified.
    """
    cfg = spec.config
    window = hann_periodic(cfg.win_length)
    frames = np.fft.irfft(spec.to_complex(), n=cfg.fft_size, axis=0)[: cfg.win_length]
    frames = frames * window[:, None]
    out_len = cfg.win_length + (spec.n_frames - 1) * cfg.hop_length
    acc = np.zeros(out_len)
    wsum = np.zeros(out_len)
    w2 = window * window
    for t in range(spec.n_frames):
        start = t * cfg.hop_length
        acc[start : start + cfg.win_length] += frames[:, t]
        wsum[start : start + cfg.win_length] += w2
    return acc / np.maximum(wsum, WSUM_FLOOR)


def stft_magnitude(signal: np.ndarray, fft_size: int, hop_length: int,
                   win_length: int) -> np.ndarray:
    """Magnitude spectrogram (bins, frames) for arbitrary framings.

    Unlike :class:`StftConfig` this places no overlap constraint on the
    framing, so it also serves the multi-resolution metric configurations.
    """
    if not fft_size >= win_length > hop_length > 0:
        raise ValueError("require fft_size >= win_length > hop_length > 0")
    signal = np.asarray(signal, dtype=np.float64)
    if len(signal) < win_length:
        raise ValueError("insufficient samples: signal shorter than one window")
    frames = _frame(signal, win_length, hop_length) * hann_periodic(win_length)
    return np.abs(np.fft.rfft(frames, n=fft_size, axis=1)).T


def compressed_magnitude(signal: np.ndarray, alpha: float = 0.3,
                         config: StftConfig | None = None) -> np.ndarray:
    """Elementwise ``alpha``-power of the STFT magnitude."""
    if alpha <= 0:
        raise ValueError("compression exponent must be positive")
    cfg = config or StftConfig()
    mag = stft_magnitude(signal, cfg.fft_size, cfg.hop_length, cfg.win_length)
    return mag ** alpha


def hz_to_mel(freq_hz):
    return 2595.0 * np.log10(1.0 + np.asarray(freq_hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # (n_mels, n_freqs), all entries >= 0
    sample_rate: int
    f_min: float
    f_max: float

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


def build_mel_filterbank(n_mels: int = 64, config: StftConfig | None = None,
                         f_min: float = 0.0, f_max: float | None = None) -> MelFilterbank:
    """Triangular Mel filters over the model-facing frequency grid (Nyquist dropped)."""
    cfg = config or StftConfig()
    n_freqs = cfg.model_bins
    if n_mels >= n_freqs:
        raise ValueError(f"n_mels ({n_mels}) must be smaller than the bin count ({n_freqs})")
    if f_max is None:
        f_max = cfg.sample_rate / 2.0
    freqs = np.arange(n_freqs) * (cfg.sample_rate / cfg.fft_size)
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    lower = edges[:-2, None]
    center = edges[1:-1, None]
    upper = edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    if not np.all(weights.sum(axis=1) > 0):
        raise ValueError("Mel grid too fine: some filters cover no frequency bin")
    return MelFilterbank(weights, cfg.sample_rate, float(f_min), float(f_max))


def log_mel(magnitude_frame: np.ndarray, filterbank: MelFilterbank,
            floor: float = LOG_FLOOR) -> np.ndarray:
    """Natural log of the Mel-projected magnitude frame, floored away from zero."""
    magnitude_frame = np.asarray(magnitude_frame)
    if np.any(magnitude_frame < 0):
        raise ValueError("magnitude frame must be nonnegative")
    return np.log(filterbank.weights @ magnitude_frame + floor)
