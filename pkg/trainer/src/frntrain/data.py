"""Corpus handling: crops, Markov loss masks, zero-fill pairs, toy corpus synthesis."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from scipy.io import wavfile

SAMPLE_RATE = 48_000

#: The four standard two-state chains as (stay_nonloss, stay_loss).
CHAINS = ((0.9, 0.1), (0.9, 0.5), (0.5, 0.1), (0.5, 0.5))

PACKET_SIZES = (256, 512, 768, 1024, 1536)


def list_wavs(corpus_dir) -> list[Path]:
    files = sorted(Path(corpus_dir).glob("*.wav"))
    if not files:
        raise ValueError(f"corpus empty: no .wav files under {corpus_dir}")
    return files


def read_wav(path) -> np.ndarray:
    rate, data = wavfile.read(path)
    if rate != SAMPLE_RATE:
        raise ValueError(f"{path}: sample rate {rate}, require {SAMPLE_RATE}")
    if data.ndim != 1:
        raise ValueError(f"{path}: mono required")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    return data.astype(np.float64)


def write_wav(path, samples: np.ndarray) -> None:
    wavfile.write(path, SAMPLE_RATE, samples.astype(np.float32))


def markov_mask(stay_nonloss: float, stay_loss: float, n_packets: int,
                rng: np.random.Generator) -> np.ndarray:
    """Per-packet loss bits; initial state drawn from the stationary law."""
    stationary_loss = (1.0 - stay_nonloss) / (2.0 - stay_nonloss - stay_loss)
    state = 1 if rng.random() < stationary_loss else 0
    bits = np.empty(n_packets, dtype=np.uint8)
    stay = (stay_nonloss, stay_loss)
    for i in range(n_packets):
        bits[i] = state
        if rng.random() >= stay[state]:
            state = 1 - state
    return bits


def zero_fill(signal: np.ndarray, bits: np.ndarray, packet_size: int) -> np.ndarray:
    mask = np.repeat(bits.astype(bool), packet_size)[: len(signal)]
    out = signal.copy()
    out[mask] = 0.0
    return out


def make_pair(clean: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, dict]:
    """Random packet size and chain, mask, zero-fill; returns (lossy, info)."""
    packet_size = int(rng.choice(PACKET_SIZES))
    chain = CHAINS[int(rng.integers(len(CHAINS)))]
    n_packets = -(-len(clean) // packet_size)
    bits = markov_mask(chain[0], chain[1], n_packets, rng)
    lossy = zero_fill(clean, bits, packet_size)
    return lossy, {"packet_size": packet_size, "chain": chain,
                   "loss_rate": float(bits.mean())}


def build_dataset(corpus_dir, n_items: int, crop_seconds: float,
                  seed: int) -> tuple[torch.Tensor, torch.Tensor, list[dict]]:
    """Random (lossy, clean) crops as float32 tensors (n_items, L)."""
    files = list_wavs(corpus_dir)
    rng = np.random.default_rng(seed)
    crop = int(round(crop_seconds * SAMPLE_RATE))
    lossy_rows, clean_rows, infos = [], [], []
    for _ in range(n_items):
        path = files[int(rng.integers(len(files)))]
        audio = read_wav(path)
        if len(audio) < crop:
            raise ValueError(f"{path}: shorter than the {crop_seconds} s crop")
        start = int(rng.integers(len(audio) - crop + 1))
        clean = audio[start : start + crop]
        lossy, info = make_pair(clean, rng)
        info["file"] = path.name
        lossy_rows.append(lossy)
        clean_rows.append(clean)
        infos.append(info)
    to_t = lambda rows: torch.tensor(np.stack(rows), dtype=torch.float32)  # noqa: E731
    return to_t(lossy_rows), to_t(clean_rows), infos


def synth_toy_corpus(out_dir, n_files: int = 12, seconds: float = 2.0,
                     seed: int = 0) -> list[Path]:
    """Synthetic speech-like clips: dense drifting harmonic stacks.

    Harmonics extend to the Nyquist band with a spectral tilt, so every
    frequency bin carries deterministic, predictable content. Stochastic
    content (noise floors) is deliberately absent: a low-dimensional frame
    representation cannot reproduce noise realizations, which would put a
    hard floor under every log-spectral comparison at desk scale.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n = int(seconds * SAMPLE_RATE)
    t = np.arange(n) / SAMPLE_RATE
    written = []
    for i in range(n_files):
        f0 = rng.uniform(130.0, 190.0)
        vibrato = 1.0 + 0.02 * np.sin(2 * np.pi * rng.uniform(3.0, 6.0) * t)
        phase = 2 * np.pi * np.cumsum(f0 * vibrato) / SAMPLE_RATE
        n_harm = int(23_000 / (f0 * 1.03))
        sig = np.zeros(n)
        for h in range(1, n_harm + 1):
            amp = rng.uniform(0.6, 1.0) / h ** 0.4
            sig += amp * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
        envelope = 0.35 + 0.65 * 0.5 * (1 + np.sin(2 * np.pi * rng.uniform(0.8, 2.5) * t
                                                   + rng.uniform(0, 2 * np.pi)))
        sig = 0.5 * sig * envelope / np.max(np.abs(sig * envelope))
        path = out_dir / f"toy{i:02d}.wav"
        write_wav(path, sig)
        written.append(path)
    return written
