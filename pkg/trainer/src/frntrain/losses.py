"""Multi-resolution compressed-magnitude STFT objective."""

from __future__ import annotations

import torch

#: (fft_size, hop, win_length) triples of the objective's analysis settings.
RESOLUTIONS = ((1024, 120, 600), (2048, 240, 1200), (512, 50, 240))

DEFAULT_COMPRESSION = 0.3


def _stft_mag(x: torch.Tensor, fft_size: int, hop: int, win: int) -> torch.Tensor:
    frames = x.unfold(-1, win, hop)
    window = torch.hann_window(win, periodic=True, device=x.device, dtype=x.dtype)
    return torch.abs(torch.fft.rfft(frames * window, n=fft_size))


def mr_stft_loss(est: torch.Tensor, ref: torch.Tensor,
                 resolutions=RESOLUTIONS,
                 alpha: float = DEFAULT_COMPRESSION) -> torch.Tensor:
    """Spectral convergence plus bin-normalized L1 on alpha-compressed magnitudes,
    averaged over resolutions, then over the batch.

    est/ref: (B, L) or (L,).
    """
    if est.dim() == 1:
        est = est.unsqueeze(0)
        ref = ref.unsqueeze(0)
    total = est.new_zeros(est.shape[0])
    for fft_size, hop, win in resolutions:
        c_ref = _stft_mag(ref, fft_size, hop, win) ** alpha
        c_est = _stft_mag(est, fft_size, hop, win) ** alpha
        diff = c_ref - c_est
        convergence = torch.linalg.matrix_norm(diff) / torch.linalg.matrix_norm(c_ref)
        l1 = diff.abs().sum(dim=(-2, -1)) / (diff.shape[-2] * diff.shape[-1])
        total = total + convergence + l1
    return (total / len(resolutions)).mean()
