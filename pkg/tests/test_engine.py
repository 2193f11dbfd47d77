import numpy as np
import pytest

from frnplc.engine import Stream, StreamPoisonedError, benchmark_rtf, validate_rtf_report
from frnplc.model import conceal_utterance

from conftest import synth_speech

HOP = 480


def _run_stream(model, samples, mode="full"):
    stream = Stream(model, mode=mode)
    outs = [stream.push_chunk(samples[i : i + HOP])
            for i in range(0, len(samples) - len(samples) % HOP, HOP)]
    outs.append(stream.flush())
    return np.concatenate(outs), stream


class TestStreamEquivalence:
    def test_hop_by_hop_equals_batch(self, tiny_model):
        x = synth_speech(np.random.default_rng(0), seconds=1.0)
        batch = conceal_utterance(tiny_model, x)
        streamed, _ = _run_stream(tiny_model, x)
        assert not streamed[:HOP].any()  # warmup hop
        assert np.max(np.abs(streamed[HOP:] - batch)) < 1e-5

    def test_encoder_only_equivalence(self, tiny_model):
        x = synth_speech(np.random.default_rng(1), seconds=0.5)
        batch = conceal_utterance(tiny_model, x, mode="encoder_only")
        streamed, _ = _run_stream(tiny_model, x, mode="encoder_only")
        assert np.max(np.abs(streamed[HOP:] - batch)) < 1e-5

    def test_arbitrary_chunking(self, tiny_model):
        rng = np.random.default_rng(2)
        x = synth_speech(rng, seconds=0.5)
        reference, _ = _run_stream(tiny_model, x)
        stream = Stream(tiny_model)
        pieces = []
        i = 0
        while i < len(x):
            step = int(rng.integers(1, 1200))
            pieces.append(stream.push_chunk(x[i : i + step]))
            i += step
        pieces.append(stream.flush())
        rebuffered = np.concatenate(pieces)
        n = min(len(rebuffered), len(reference))
        assert np.array_equal(rebuffered[:n], reference[:n])

    def test_sample_conservation(self, tiny_model):
        x = synth_speech(np.random.default_rng(3), seconds=0.5)
        n_hops = len(x) // HOP
        stream = Stream(tiny_model)
        total_out = sum(len(stream.push_chunk(x[i * HOP : (i + 1) * HOP]))
                        for i in range(n_hops))
        assert total_out == n_hops * HOP

    def test_determinism(self, tiny_model):
        x = synth_speech(np.random.default_rng(4), seconds=0.3)
        a, _ = _run_stream(tiny_model, x)
        b, _ = _run_stream(tiny_model, x)
        assert np.array_equal(a, b)


class TestStreamState:
    def test_poisoned_input(self, tiny_model):
        stream = Stream(tiny_model)
        bad = np.zeros(HOP)
        bad[3] = np.inf
        with pytest.raises(StreamPoisonedError):
            stream.push_chunk(bad)
        with pytest.raises(StreamPoisonedError):
            stream.push_chunk(np.zeros(HOP))
        stream.reset()
        assert len(stream.push_chunk(np.zeros(HOP))) == HOP

    def test_poisoned_model_output(self, tiny_model, monkeypatch):
        stream = Stream(tiny_model)
        bad_frame = np.full((2, 480), np.inf, dtype=np.float32)
        monkeypatch.setattr(type(tiny_model), "step",
                            lambda self, frame, state, mode="full": (bad_frame, state))
        with pytest.raises(StreamPoisonedError, match="non-finite model output"):
            stream.push_chunk(np.zeros(2 * HOP))
        monkeypatch.undo()
        with pytest.raises(StreamPoisonedError):
            stream.push_chunk(np.zeros(HOP))
        stream.reset()
        assert len(stream.push_chunk(np.zeros(HOP))) == HOP

    def test_flat_memory_footprint(self, tiny_model):
        x = synth_speech(np.random.default_rng(5), seconds=2.0)
        stream = Stream(tiny_model)
        sizes = set()
        for i in range(len(x) // HOP):
            stream.push_chunk(x[i * HOP : (i + 1) * HOP])
            if i >= 2:
                sizes.add(stream.state_nbytes())
        assert len(sizes) == 1

    def test_latency_accounting(self, tiny_model):
        assert Stream(tiny_model).latency_samples == 960


class TestBenchmark:
    def test_report_schema_and_bound(self, tiny_model):
        report = benchmark_rtf(tiny_model, duration_s=0.5)
        validate_rtf_report(report)
        assert report["rtf"] > 0
        assert report["hop_ms"] == pytest.approx(10.0)
        assert report["machine"]["cpu"]

    def test_single_thread_contract(self, tiny_model):
        with pytest.raises(ValueError):
            benchmark_rtf(tiny_model, duration_s=0.1, threads=4)

    def test_schema_validation_rejects_missing_key(self, tiny_model):
        report = benchmark_rtf(tiny_model, duration_s=0.2)
        del report["rtf"]
        with pytest.raises(ValueError, match="rtf"):
            validate_rtf_report(report)

    def test_encoder_only_not_slower(self, full_model):
        full = benchmark_rtf(full_model, duration_s=1.0)
        enc = benchmark_rtf(full_model, duration_s=1.0, mode="encoder_only")
        # Strict subset of the work; allow timer noise.
        assert enc["rtf"] <= full["rtf"] * 1.2
