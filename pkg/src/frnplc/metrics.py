"""Spectral evaluation: multi-resolution compressed STFT loss and log-spectral distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import stft_magnitude


@dataclass(frozen=True)
class Resolution:
    fft_size: int
    hop_length: int
    win_length: int

    def __post_init__(self) -> None:
        if not self.fft_size >= self.win_length > self.hop_length > 0:
            raise ValueError("require fft_size >= win_length > hop_length > 0")


#: Multi-resolution analysis settings used by the training objective.
DEFAULT_RESOLUTIONS = (
    Resolution(1024, 120, 600),
    Resolution(2048, 240, 1200),
    Resolution(512, 50, 240),
)

DEFAULT_COMPRESSION = 0.3

LSD_FFT_SIZE = 2048
LSD_HOP_LENGTH = 512
LSD_EPS = 1e-8


def mr_stft_loss(est: np.ndarray, ref: np.ndarray,
                 resolutions: tuple[Resolution, ...] = DEFAULT_RESOLUTIONS,
                 alpha: float = DEFAULT_COMPRESSION) -> float:
    """Mean over resolutions of spectral convergence plus per-bin L1 magnitude error.

    Magnitudes are compressed elementwise to the ``alpha`` power before the
    comparison; the L1 term is normalized by the total bin count of each
    resolution.
    """
    if alpha <= 0:
        raise ValueError("compression exponent must be positive")
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise ValueError("signals must be 1-D and of equal length")
    if not np.any(ref):
        raise ValueError("undefined spectral convergence: reference signal is all zero")
    total = 0.0
    for res in resolutions:
        c_ref = stft_magnitude(ref, res.fft_size, res.hop_length, res.win_length) ** alpha
        c_est = stft_magnitude(est, res.fft_size, res.hop_length, res.win_length) ** alpha
        ref_norm = np.linalg.norm(c_ref)
        if ref_norm == 0.0:
            raise ValueError("undefined spectral convergence: reference spectrum is all zero")
        diff = c_ref - c_est
        convergence = np.linalg.norm(diff) / ref_norm
        magnitude_l1 = np.abs(diff).sum() / diff.size
        total += convergence + magnitude_l1
    return total / len(resolutions)


def lsd(ref: np.ndarray, est: np.ndarray, fft_size: int = LSD_FFT_SIZE,
        hop_length: int = LSD_HOP_LENGTH, win_length: int | None = None,
        eps: float = LSD_EPS) -> float:
    """Log-spectral distance in dB: RMS over frequency, mean over frames."""
    ref = np.asarray(ref, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if ref.shape != est.shape or ref.ndim != 1:
        raise ValueError("signals must be 1-D and of equal length")
    win_length = win_length or fft_size
    s_ref = stft_magnitude(ref, fft_size, hop_length, win_length)
    s_est = stft_magnitude(est, fft_size, hop_length, win_length)
    log_ratio = 20.0 * np.log10((s_ref + eps) / (s_est + eps))
    return float(np.mean(np.sqrt(np.mean(log_ratio ** 2, axis=0))))
