"""Recorded input/state/output tuples for cross-implementation agreement checks.

A parity file pins, for fixed random inputs and states, the outputs of the
encoder step, predictor step, joiner step, and the full recurrence, so any
exporter of the weight-archive format can verify its model definition against
this engine numerically. Files are JSON with full-precision floats; exporting
twice with the same seed yields byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .model import JOINER_HIDDEN_CHANNELS, JOINER_KERNEL, EncoderState, FrnModel, \
    FrnState, PredictorState

PARITY_SCHEMA = "parity-v1"

#: Replay comparisons pass when |a - b| <= REL_TOL*|b| + ABS_FLOOR elementwise:
#: 1e-4 relative with deviations below the 1e-6 absolute floor always accepted
#: (float32 summation-order noise sits orders of magnitude under both).
REL_TOL = 1e-4
ABS_FLOOR = 1e-6


def max_rel_error(actual: np.ndarray, expected: np.ndarray,
                  floor: float = ABS_FLOOR) -> float:
    """Worst-case relative error with an absolute floor; < REL_TOL passes."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    denom = np.abs(expected) + floor / REL_TOL
    return float(np.max(np.abs(actual - expected) / denom))


def _tolist(arr) -> list:
    return np.asarray(arr, dtype=np.float64).tolist()


def export_parity_vectors(model: FrnModel, seed: int = 0, n_seq: int = 3) -> dict:
    """Record submodule outputs for fixed random inputs and states."""
    cfg = model.config
    rng = np.random.default_rng(seed)
    f = cfg.n_bins
    kt = JOINER_KERNEL[1]

    def rand(*shape):
        return rng.standard_normal(shape).astype(np.float32)

    def bounded(*shape):
        return rng.uniform(-0.9, 0.9, shape).astype(np.float32)

    cases: dict[str, dict] = {}

    frame = rand(2 * f)
    enc_hidden = [bounded(cfg.dim) for _ in range(cfg.n_blocks)]
    enc_out, enc_next = model.encoder_step(frame, EncoderState([h.copy() for h in enc_hidden]))
    cases["encoder_step"] = {
        "frame": _tolist(frame),
        "hidden": [_tolist(h) for h in enc_hidden],
        "output": _tolist(enc_out),
        "hidden_next": [_tolist(h) for h in enc_next.hidden],
    }

    prev = rand(2, f) * 0.5
    ph, pc = bounded(cfg.predictor_hidden), bounded(cfg.predictor_hidden)
    pred_out, pred_next = model.predictor_step(prev, PredictorState(ph.copy(), pc.copy()))
    cases["predictor_step"] = {
        "prev_frame": _tolist(prev),
        "h": _tolist(ph), "c": _tolist(pc),
        "output": _tolist(pred_out),
        "h_next": _tolist(pred_next.h), "c_next": _tolist(pred_next.c),
    }

    zero_prev = np.zeros((2, f), dtype=np.float32)
    zero_state = PredictorState(np.zeros(cfg.predictor_hidden, dtype=np.float32),
                                np.zeros(cfg.predictor_hidden, dtype=np.float32))
    z_out, z_next = model.predictor_step(zero_prev, zero_state)
    cases["predictor_step_zero"] = {
        "output": _tolist(z_out),
        "h_next": _tolist(z_next.h), "c_next": _tolist(z_next.c),
    }

    enc_frame = rand(2, f)
    pred_mag = np.abs(rand(f))
    ctx_in = rand(3, f, kt - 1) * 0.5
    ctx_mid = rand(JOINER_HIDDEN_CHANNELS, f, kt - 1) * 0.5
    j_out, j_ctx_in, j_ctx_mid = model.joiner_step(enc_frame, pred_mag,
                                                   ctx_in.copy(), ctx_mid.copy())
    cases["joiner_step"] = {
        "enc_frame": _tolist(enc_frame),
        "pred_mag": _tolist(pred_mag),
        "ctx_in": _tolist(ctx_in), "ctx_mid": _tolist(ctx_mid),
        "output": _tolist(j_out),
    }

    seq = rand(n_seq, 2, f) * 0.5
    state = model.new_state()
    outputs = []
    for t in range(n_seq):
        out, state = model.step(seq[t], state)
        outputs.append(_tolist(out))
    cases["frn_step_seq"] = {"frames": _tolist(seq), "outputs": outputs}

    return {
        "schema": PARITY_SCHEMA,
        "seed": seed,
        "config": {k: int(v) for k, v in vars(cfg).items()},
        "cases": cases,
    }


def save_parity_vectors(vectors: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(vectors, fh, sort_keys=True, separators=(",", ":"))


def load_parity_vectors(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        vectors = json.load(fh)
    if vectors.get("schema") != PARITY_SCHEMA:
        raise ValueError(f"unexpected parity schema {vectors.get('schema')!r}")
    return vectors


def replay_parity_vectors(model: FrnModel, vectors: dict) -> dict[str, float]:
    """Re-run every recorded case; returns the max relative error per case."""
    f32 = lambda x: np.asarray(x, dtype=np.float32)  # noqa: E731
    cases = vectors["cases"]
    errors: dict[str, float] = {}

    c = cases["encoder_step"]
    out, nxt = model.encoder_step(f32(c["frame"]), EncoderState([f32(h) for h in c["hidden"]]))
    errors["encoder_step"] = max(
        max_rel_error(out, c["output"]),
        max(max_rel_error(h, e) for h, e in zip(nxt.hidden, c["hidden_next"])))

    c = cases["predictor_step"]
    out, nxt = model.predictor_step(f32(c["prev_frame"]), PredictorState(f32(c["h"]), f32(c["c"])))
    errors["predictor_step"] = max(max_rel_error(out, c["output"]),
                                   max_rel_error(nxt.h, c["h_next"]),
                                   max_rel_error(nxt.c, c["c_next"]))

    c = cases["predictor_step_zero"]
    cfg = model.config
    out, nxt = model.predictor_step(
        np.zeros((2, cfg.n_bins), dtype=np.float32),
        PredictorState(np.zeros(cfg.predictor_hidden, dtype=np.float32),
                       np.zeros(cfg.predictor_hidden, dtype=np.float32)))
    errors["predictor_step_zero"] = max(max_rel_error(out, c["output"]),
                                        max_rel_error(nxt.h, c["h_next"]),
                                        max_rel_error(nxt.c, c["c_next"]))

    c = cases["joiner_step"]
    out, _, _ = model.joiner_step(f32(c["enc_frame"]), f32(c["pred_mag"]),
                                  f32(c["ctx_in"]), f32(c["ctx_mid"]))
    errors["joiner_step"] = max_rel_error(out, c["output"])

    c = cases["frn_step_seq"]
    frames = f32(c["frames"])
    state = model.new_state()
    worst = 0.0
    for t in range(frames.shape[0]):
        out, state = model.step(frames[t], state)
        worst = max(worst, max_rel_error(out, c["outputs"][t]))
    errors["frn_step_seq"] = worst
    return errors
