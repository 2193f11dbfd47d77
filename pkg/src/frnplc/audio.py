"""WAV I/O: 48 kHz mono, 16-bit PCM or 32-bit float. No resampling, ever."""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

PCM16 = "pcm16"
FLOAT32 = "float32"

# Power-of-two scale keeps int16 <-> float round trips bit-exact.
_PCM16_SCALE = 32768.0


class AudioError(ValueError):
    """Unsupported or inconsistent audio input."""


def read_wav(path, expect_rate: int | None = None) -> tuple[np.ndarray, int, str]:
    """Read a mono WAV; returns (samples float64 in [-1, 1], rate, subtype)."""
    rate, data = wavfile.read(path)
    if data.ndim != 1:
        raise AudioError(f"{path}: expected mono audio, got {data.ndim} channels")
    if expect_rate is not None and rate != expect_rate:
        raise AudioError(f"{path}: sample rate is {rate} Hz, require {expect_rate} Hz "
                         "(resampling is refused)")
    if data.dtype == np.int16:
        return data.astype(np.float64) / _PCM16_SCALE, int(rate), PCM16
    if data.dtype == np.float32:
        return data.astype(np.float64), int(rate), FLOAT32
    raise AudioError(f"{path}: unsupported sample format {data.dtype}; "
                     "accepted formats are 16-bit PCM and 32-bit float")


def write_wav(path, samples: np.ndarray, rate: int, subtype: str = PCM16) -> None:
    samples = np.asarray(samples, dtype=np.float64)
    if subtype == PCM16:
        clipped = np.clip(samples, -1.0, (_PCM16_SCALE - 1.0) / _PCM16_SCALE)
        wavfile.write(path, rate, np.round(clipped * _PCM16_SCALE).astype(np.int16))
    elif subtype == FLOAT32:
        wavfile.write(path, rate, samples.astype(np.float32))
    else:
        raise AudioError(f"unsupported output subtype {subtype!r}")
