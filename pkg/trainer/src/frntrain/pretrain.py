"""Predictor pretraining: next-frame magnitude prediction on clean speech."""

from __future__ import annotations

import math

import numpy as np
import torch

from .dsp import frame_magnitude, stft_frames
from .model import Predictor


def magnitude_sequences(clean: torch.Tensor) -> torch.Tensor:
    """Clean waveforms (B, L) -> magnitude sequences (T, B, F)."""
    frames = stft_frames(clean)  # (B, 2, F, T)
    return frame_magnitude(frames[:, 0], frames[:, 1]).permute(2, 0, 1)


def next_frame_l1(predictor: Predictor, clean: torch.Tensor) -> float:
    """Mean L1 between predicted and true next-frame magnitudes (teacher-forced)."""
    predictor.eval()
    with torch.no_grad():
        mags = magnitude_sequences(clean)
        pred = predictor.forward_sequence(mags[:-1])
        return float(torch.mean(torch.abs(pred - mags[1:])))


def pretrain_predictor(predictor: Predictor, clean: torch.Tensor, steps: int,
                       batch_size: int, lr: float = 1e-4,
                       seed: int = 0) -> list[dict]:
    """L1 on linear-scale magnitudes, one-frame-ahead, Adam. Returns the curve."""
    rng = np.random.default_rng(seed)
    optimizer = torch.optim.Adam(predictor.parameters(), lr=lr)
    curve = []
    predictor.train()
    for step in range(steps):
        idx = rng.integers(clean.shape[0], size=min(batch_size, clean.shape[0]))
        mags = magnitude_sequences(clean[idx])
        pred = predictor.forward_sequence(mags[:-1])
        loss = torch.mean(torch.abs(pred - mags[1:]))
        if not math.isfinite(loss.item()):
            raise RuntimeError(f"pretraining diverged at step {step}: loss={loss.item()}")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        curve.append({"step": step, "loss": float(loss.item())})
    return curve
