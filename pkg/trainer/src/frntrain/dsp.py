"""Torch signal front end.

Framing conventions are part of the inference contract and must not drift:
960-point transform, 960-sample periodic Hann window, 480-sample hop, no
centering (first frame covers samples [0, 960)), model view drops the Nyquist
bin. The Mel filterbank formula below is likewise contract-fixed.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

SAMPLE_RATE = 48_000
FFT_SIZE = 960
WIN_LENGTH = 960
HOP_LENGTH = 480
N_BINS = 480  # one-sided spectrum minus the Nyquist bin
LOG_FLOOR = 1e-8
MAG_EPS = 1e-12


def hann_window(device=None, dtype=torch.float32) -> torch.Tensor:
    return torch.hann_window(WIN_LENGTH, periodic=True, device=device, dtype=dtype)


def n_frames(n_samples: int) -> int:
    return (n_samples - WIN_LENGTH) // HOP_LENGTH + 1


def stft_frames(x: torch.Tensor) -> torch.Tensor:
    """(B, L) waveforms -> (B, 2, N_BINS, T) real/imag frame stacks."""
    frames = x.unfold(-1, WIN_LENGTH, HOP_LENGTH)  # (B, T, win)
    spec = torch.fft.rfft(frames * hann_window(x.device, x.dtype), n=FFT_SIZE)
    spec = spec[..., :N_BINS].transpose(1, 2)  # (B, N_BINS, T)
    return torch.stack([spec.real, spec.imag], dim=1)


def overlap_add(frames: torch.Tensor) -> torch.Tensor:
    """(B, 2, N_BINS, T) frame stacks -> (B, L) via windowed overlap-add.

    The Nyquist bin is reattached as zero. The squared-window normalizer is
    floored at its interior minimum (0.5), matching the inference engine:
    interior samples are exact, edges fade without amplification, and no
    gradient path through the division exceeds 2x gain.
    """
    b, _, _, t = frames.shape
    spec = torch.complex(frames[:, 0], frames[:, 1])  # (B, N_BINS, T)
    spec = F.pad(spec, (0, 0, 0, 1))  # zero Nyquist row
    synth = torch.fft.irfft(spec.transpose(1, 2), n=FFT_SIZE)[..., :WIN_LENGTH]  # (B,T,win)
    window = hann_window(frames.device, synth.dtype)
    out_len = WIN_LENGTH + (t - 1) * HOP_LENGTH
    acc = F.fold((synth * window).transpose(1, 2), output_size=(out_len, 1),
                 kernel_size=(WIN_LENGTH, 1), stride=(HOP_LENGTH, 1))
    wsum = F.fold((window * window).expand(1, t, WIN_LENGTH).transpose(1, 2),
                  output_size=(out_len, 1), kernel_size=(WIN_LENGTH, 1),
                  stride=(HOP_LENGTH, 1))
    return (acc / wsum.clamp_min(0.5)).reshape(b, out_len)


def frame_magnitude(real: torch.Tensor, imag: torch.Tensor) -> torch.Tensor:
    return torch.sqrt(real * real + imag * imag + MAG_EPS)


def mel_filterbank(n_mels: int, f_min: float = 0.0,
                   f_max: float | None = None) -> np.ndarray:
    """Triangular HTK-scale filters on the model frequency grid, float64."""
    if f_max is None:
        f_max = SAMPLE_RATE / 2.0
    freqs = np.arange(N_BINS) * (SAMPLE_RATE / FFT_SIZE)

    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)

    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    if not np.all(weights.sum(axis=1) > 0):
        raise ValueError("Mel grid too fine: empty filter row")
    return weights
