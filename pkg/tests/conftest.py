import numpy as np
import pytest

from frnplc.audio import write_wav
from frnplc.model import TINY_CONFIG, FrnConfig, FrnModel, random_archive

RATE = 48_000


def synth_speech(rng: np.random.Generator, seconds: float = 1.0,
                 rate: int = RATE) -> np.ndarray:
    """Speech-like test signal: drifting harmonic stack with syllabic modulation."""
    n = int(seconds * rate)
    t = np.arange(n) / rate
    f0 = rng.uniform(110.0, 220.0)
    vibrato = 1.0 + 0.02 * np.sin(2 * np.pi * rng.uniform(2.0, 5.0) * t)
    phase = 2 * np.pi * np.cumsum(f0 * vibrato) / rate
    sig = np.zeros(n)
    for h in range(1, 12):
        sig += (rng.uniform(0.3, 1.0) / h) * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    envelope = 0.25 + 0.75 * 0.5 * (1 + np.sin(2 * np.pi * rng.uniform(1.0, 3.0) * t
                                               + rng.uniform(0, 2 * np.pi)))
    sig = sig * envelope + 0.005 * rng.standard_normal(n)
    return 0.5 * sig / np.max(np.abs(sig))


@pytest.fixture(scope="session")
def tiny_model() -> FrnModel:
    return FrnModel(random_archive(TINY_CONFIG, seed=7))


@pytest.fixture(scope="session")
def full_model() -> FrnModel:
    return FrnModel(random_archive(FrnConfig(), seed=11))


@pytest.fixture()
def speech_corpus(tmp_path):
    """Write a small 48 kHz mono corpus; returns (dir, list of sample arrays)."""
    rng = np.random.default_rng(2024)
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    signals = []
    for i in range(4):
        sig = synth_speech(rng, seconds=1.0)
        write_wav(corpus / f"clip{i:02d}.wav", sig, RATE)
        signals.append(sig)
    return corpus, signals
