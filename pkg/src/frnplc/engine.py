"""Chunk-in/chunk-out streaming wrapper and the real-time benchmark.

Native granularity is one hop (480 samples, 10 ms). The first pushed hop only
primes the half-filled analysis window and emits an all-zero warmup hop; every
later hop completes exactly one analysis window, runs one model step, and
emits one fully-overlapped synthesis hop. The stream therefore outputs exactly
as many samples as it consumes, delayed by one hop relative to the
whole-utterance path; ``flush()`` emits the final synthesis tail so that

    concat(push(x_0), push(x_1), ..., flush())[hop:]  ==  conceal_utterance(x)

holds exactly. Algorithmic latency is one window (20 ms).
"""

from __future__ import annotations

import os
import platform
import time

import numpy as np

from .dsp import WSUM_FLOOR, hann_periodic
from .model import FrnModel

RTF_REPORT_SCHEMA = "rtf-report-v1"


class StreamPoisonedError(RuntimeError):
    """The stream saw non-finite values and must be reset before reuse."""


class Stream:
    """Single-owner streaming state over shared immutable weights."""

    def __init__(self, model: FrnModel, mode: str = "full"):
        self.model = model
        self.mode = mode
        cfg = model.stft_config
        self._win = cfg.win_length
        self._hop = cfg.hop_length
        self._window = hann_periodic(self._win)
        self._window_sq = self._window * self._window
        self.reset()

    def reset(self) -> None:
        self._analysis = np.zeros(self._win, dtype=np.float64)
        self._ola = np.zeros(self._win, dtype=np.float64)
        self._wsum = np.zeros(self._win, dtype=np.float64)
        self._pending = np.empty(0, dtype=np.float64)
        self._state = self.model.new_state()
        self._hops_in = 0
        self._poisoned = False

    @property
    def hop_length(self) -> int:
        return self._hop

    @property
    def latency_samples(self) -> int:
        return self._win

    def state_nbytes(self) -> int:
        """Total bytes held by per-stream buffers; constant after priming."""
        st = self._state
        arrays = [self._analysis, self._ola, self._wsum, self._pending,
                  st.prev_output, st.joiner_ctx_in, st.joiner_ctx_mid,
                  st.predictor.h, st.predictor.c, *st.encoder.hidden]
        return int(sum(a.nbytes for a in arrays))

    def _emit(self) -> np.ndarray:
        hop = self._hop
        out = self._ola[:hop] / np.maximum(self._wsum[:hop], WSUM_FLOOR)
        self._ola[:-hop] = self._ola[hop:]
        self._ola[-hop:] = 0.0
        self._wsum[:-hop] = self._wsum[hop:]
        self._wsum[-hop:] = 0.0
        return out

    def _push_hop(self, samples: np.ndarray) -> np.ndarray:
        self._analysis[: -self._hop] = self._analysis[self._hop :]
        self._analysis[-self._hop :] = samples
        self._hops_in += 1
        if self._hops_in == 1:
            # Analysis window still half empty: pure warmup hop.
            return np.zeros(self._hop, dtype=np.float64)
        spectrum = np.fft.rfft(self._analysis * self._window,
                               n=self.model.stft_config.fft_size)
        frame = np.empty((2, self.model.config.n_bins), dtype=np.float32)
        frame[0] = spectrum.real[: self.model.config.n_bins]
        frame[1] = spectrum.imag[: self.model.config.n_bins]
        out_frame, self._state = self.model.step(frame, self._state, mode=self.mode)
        if not np.all(np.isfinite(out_frame)):
            self._poisoned = True
            raise StreamPoisonedError("non-finite model output; reset the stream")
        full = np.zeros(self.model.stft_config.n_bins, dtype=np.complex128)
        full[: self.model.config.n_bins] = out_frame[0] + 1j * out_frame[1]
        synth = np.fft.irfft(full, n=self.model.stft_config.fft_size)[: self._win]
        self._ola += synth * self._window
        self._wsum += self._window_sq
        return self._emit()

    def push_chunk(self, samples: np.ndarray) -> np.ndarray:
        """Feed samples; returns one hop of output per completed input hop.

        Any chunk length is accepted and rebuffered internally; a hop-sized
        chunk yields a hop-sized output block.
        """
        if self._poisoned:
            raise StreamPoisonedError("stream is poisoned; call reset() first")
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("chunk must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            self._poisoned = True
            raise StreamPoisonedError("non-finite input samples; reset the stream")
        buf = np.concatenate([self._pending, samples])
        hop = self._hop
        n_hops = len(buf) // hop
        self._pending = buf[n_hops * hop :].copy()
        outs = [self._push_hop(buf[i * hop : (i + 1) * hop]) for i in range(n_hops)]
        if not outs:
            return np.empty(0, dtype=np.float64)
        return np.concatenate(outs)

    def flush(self) -> np.ndarray:
        """Emit the final overlap-add tail (one hop)."""
        if self._poisoned:
            raise StreamPoisonedError("stream is poisoned; call reset() first")
        return self._emit()


def _machine_descriptor() -> dict:
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo", "r", encoding="utf-8") as fh:
            for line in fh:
                if line.lower().startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return {
        "cpu": cpu,
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
    }


def benchmark_rtf(model: FrnModel, duration_s: float = 10.0, threads: int = 1,
                  mode: str = "full", seed: int = 0, warmup_hops: int = 20) -> dict:
    """Time per-hop streaming cost on synthetic input, single-threaded.

    RTF is mean per-hop processing time over the hop duration (10 ms);
    values below 1.0 mean faster than real time.
    """
    if threads != 1:
        raise ValueError("benchmark contract is single-threaded")
    cfg = model.stft_config
    hop_ms = 1000.0 * cfg.hop_length / cfg.sample_rate
    n_hops = max(1, int(duration_s * cfg.sample_rate / cfg.hop_length))
    rng = np.random.default_rng(seed)
    audio = rng.standard_normal((n_hops + warmup_hops) * cfg.hop_length) * 0.1
    stream = Stream(model, mode=mode)

    def run() -> np.ndarray:
        times = np.empty(n_hops)
        for i in range(warmup_hops):
            stream.push_chunk(audio[i * cfg.hop_length : (i + 1) * cfg.hop_length])
        base = warmup_hops * cfg.hop_length
        for i in range(n_hops):
            chunk = audio[base + i * cfg.hop_length : base + (i + 1) * cfg.hop_length]
            t0 = time.perf_counter_ns()
            stream.push_chunk(chunk)
            times[i] = (time.perf_counter_ns() - t0) / 1e6
        return times

    try:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=1):
            times = run()
        blas_threads = 1
    except ImportError:
        times = run()
        blas_threads = None

    mean_ms = float(times.mean())
    return {
        "schema": RTF_REPORT_SCHEMA,
        "mode": mode,
        "hop_ms": hop_ms,
        "n_hops": int(n_hops),
        "mean_hop_ms": mean_ms,
        "p50_hop_ms": float(np.percentile(times, 50)),
        "p95_hop_ms": float(np.percentile(times, 95)),
        "max_hop_ms": float(times.max()),
        "rtf": mean_ms / hop_ms,
        "threads": 1,
        "blas_threads": blas_threads,
        "n_parameters": model.n_parameters(),
        "machine": _machine_descriptor(),
    }


_RTF_REPORT_KEYS = {
    "schema": str, "mode": str, "hop_ms": float, "n_hops": int,
    "mean_hop_ms": float, "p50_hop_ms": float, "p95_hop_ms": float,
    "max_hop_ms": float, "rtf": float, "threads": int,
    "n_parameters": int, "machine": dict,
}


def validate_rtf_report(report: dict) -> None:
    """Raise if the benchmark report does not match the fixed schema."""
    if report.get("schema") != RTF_REPORT_SCHEMA:
        raise ValueError(f"unexpected report schema {report.get('schema')!r}")
    for key, kind in _RTF_REPORT_KEYS.items():
        if key not in report:
            raise ValueError(f"report missing key {key!r}")
        if not isinstance(report[key], kind):
            raise ValueError(f"report key {key!r} has type {type(report[key]).__name__}, "
                             f"expected {kind.__name__}")
