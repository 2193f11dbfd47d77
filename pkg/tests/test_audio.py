import numpy as np
import pytest
from scipy.io import wavfile

from frnplc.audio import FLOAT32, PCM16, AudioError, read_wav, write_wav


def test_pcm16_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    ints = rng.integers(-32768, 32768, size=4800, dtype=np.int16)
    path = tmp_path / "a.wav"
    wavfile.write(path, 48_000, ints)
    samples, rate, subtype = read_wav(path)
    assert (rate, subtype) == (48_000, PCM16)
    write_wav(tmp_path / "b.wav", samples, rate, subtype)
    _, back = wavfile.read(tmp_path / "b.wav")
    assert np.array_equal(back, ints)


def test_float32_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    data = (rng.standard_normal(4800) * 0.3).astype(np.float32)
    path = tmp_path / "a.wav"
    wavfile.write(path, 48_000, data)
    samples, rate, subtype = read_wav(path)
    assert subtype == FLOAT32
    write_wav(tmp_path / "b.wav", samples, rate, subtype)
    _, back = wavfile.read(tmp_path / "b.wav")
    assert np.array_equal(back, data)


def test_rate_refusal(tmp_path):
    path = tmp_path / "a.wav"
    wavfile.write(path, 16_000, np.zeros(100, dtype=np.int16))
    with pytest.raises(AudioError, match="48000"):
        read_wav(path, expect_rate=48_000)


def test_stereo_refused(tmp_path):
    path = tmp_path / "a.wav"
    wavfile.write(path, 48_000, np.zeros((100, 2), dtype=np.int16))
    with pytest.raises(AudioError, match="mono"):
        read_wav(path)


def test_unsupported_dtype(tmp_path):
    path = tmp_path / "a.wav"
    wavfile.write(path, 48_000, np.zeros(100, dtype=np.int32))
    with pytest.raises(AudioError, match="unsupported"):
        read_wav(path)
