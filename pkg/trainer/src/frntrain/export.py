"""Exports consumed by the inference engine: weight archives and parity vectors.

Both file formats are fixed contracts. The archive layout is the flat binary
container (magic ``FRNWTS01``, length-prefixed JSON header, 64-byte-aligned
little-endian float32 payloads); parity vectors are JSON records of
input/state/output tuples for fixed random cases.
"""

from __future__ import annotations

import json
import struct

import numpy as np
import torch

from .model import JOINER_HIDDEN_CHANNELS, JOINER_KERNEL, FrnNet, NetConfig

MAGIC = b"FRNWTS01"
SCHEMA_VERSION = "1"
ARCH_ID = "frn-v1"
_ALIGN = 64

PARITY_SCHEMA = "parity-v1"

#: Conventions baked into this exporter; must match the archive metadata contract.
CELL_CONVENTIONS = {
    "lstm_gate_order": "i,f,g,o",
    "gru_gate_order": "r,z,n",
    "gru_new_gate": "reset_before_matmul",
    "dtype": "float32-le",
}


def archive_metadata(cfg: NetConfig, extra: dict | None = None) -> dict[str, str]:
    md = {"schema_version": SCHEMA_VERSION, "arch": ARCH_ID}
    md.update(CELL_CONVENTIONS)
    md.update({f"config.{k}": str(v) for k, v in vars(cfg).items()})
    if extra:
        md.update({str(k): str(v) for k, v in extra.items()})
    return md


def model_entries(net: FrnNet) -> dict[str, np.ndarray]:
    """Map module parameters onto the canonical archive tensor names."""
    def get(t: torch.Tensor) -> np.ndarray:
        return t.detach().cpu().numpy().astype(np.float32)

    enc, pred, join = net.encoder, net.predictor, net.joiner
    entries: dict[str, np.ndarray] = {
        "encoder.proj_in.weight": get(enc.proj_in.weight),
        "encoder.proj_in.bias": get(enc.proj_in.bias),
    }
    for k, block in enumerate(enc.blocks):
        p = f"encoder.block{k}."
        entries[p + "rnn_norm.scale"] = get(block.rnn_norm.scale)
        entries[p + "rnn_norm.bias"] = get(block.rnn_norm.bias)
        entries[p + "gru.w_ih"] = get(block.gru.weight_ih_l0)
        entries[p + "gru.w_hh"] = get(block.gru.weight_hh_l0)
        entries[p + "gru.b_ih"] = get(block.gru.bias_ih_l0)
        entries[p + "gru.b_hh"] = get(block.gru.bias_hh_l0)
        entries[p + "mlp_norm.scale"] = get(block.mlp_norm.scale)
        entries[p + "mlp_norm.bias"] = get(block.mlp_norm.bias)
        entries[p + "mlp.fc1.weight"] = get(block.fc1.weight)
        entries[p + "mlp.fc1.bias"] = get(block.fc1.bias)
        entries[p + "mlp.fc2.weight"] = get(block.fc2.weight)
        entries[p + "mlp.fc2.bias"] = get(block.fc2.bias)
    entries.update({
        "encoder.proj_out.weight": get(enc.proj_out.weight),
        "encoder.proj_out.bias": get(enc.proj_out.bias),
        "predictor.lstm.w_ih": get(pred.lstm.weight_ih_l0),
        "predictor.lstm.w_hh": get(pred.lstm.weight_hh_l0),
        "predictor.lstm.b_ih": get(pred.lstm.bias_ih_l0),
        "predictor.lstm.b_hh": get(pred.lstm.bias_hh_l0),
        "predictor.to_mel.weight": get(pred.to_mel.weight),
        "predictor.to_mel.bias": get(pred.to_mel.bias),
        "predictor.inv_mel.weight": get(pred.inv_mel.weight),
        "predictor.inv_mel.bias": get(pred.inv_mel.bias),
        "joiner.conv1.weight": get(join.conv1.weight),
        "joiner.conv1.bias": get(join.conv1.bias),
        "joiner.conv2.weight": get(join.conv2.weight),
        "joiner.conv2.bias": get(join.conv2.bias),
    })
    return entries


def save_archive(entries: dict[str, np.ndarray], metadata: dict[str, str], path) -> None:
    records = []
    offset = 0
    tensors = {}
    for name, tensor in entries.items():
        tensor = np.ascontiguousarray(tensor, dtype="<f4")
        if not np.all(np.isfinite(tensor)):
            raise ValueError(f"non-finite weights in tensor {name!r}")
        tensors[name] = tensor
        records.append({"name": name, "shape": list(tensor.shape), "offset": offset})
        offset = (offset + tensor.nbytes + _ALIGN - 1) // _ALIGN * _ALIGN
    header = {"schema_version": SCHEMA_VERSION, "metadata": metadata, "tensors": records}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload_base = (len(MAGIC) + 8 + len(header_bytes) + _ALIGN - 1) // _ALIGN * _ALIGN
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(b"\0" * (payload_base - len(MAGIC) - 8 - len(header_bytes)))
        for record, name in zip(records, tensors):
            fh.seek(payload_base + record["offset"])
            fh.write(tensors[name].tobytes())


def export_archive(net: FrnNet, path, extra_metadata: dict | None = None) -> None:
    save_archive(model_entries(net), archive_metadata(net.cfg, extra_metadata), path)


def export_training_curve(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for row in rows:
            fh.write(f"{row['step']},{row['loss']:.8g}\n")


# ---- parity vectors -----------------------------------------------------------


def _tolist(x) -> list:
    if isinstance(x, torch.Tensor):
        x = x.detach().cpu().numpy()
    return np.asarray(x, dtype=np.float64).tolist()


@torch.no_grad()
def export_parity_vectors(net: FrnNet, seed: int = 0, n_seq: int = 3) -> dict:
    """Record encoder/predictor/joiner/full-step outputs for fixed random cases."""
    net.eval()
    cfg = net.cfg
    f = cfg.n_bins
    kt = JOINER_KERNEL - 1
    rng = np.random.default_rng(seed)

    def rand(*shape):
        return torch.tensor(rng.standard_normal(shape), dtype=torch.float32)

    def bounded(*shape):
        return torch.tensor(rng.uniform(-0.9, 0.9, shape), dtype=torch.float32)

    cases: dict[str, dict] = {}

    frame = rand(2 * f)
    hidden = [bounded(cfg.dim) for _ in range(cfg.n_blocks)]
    out, hidden_next = net.encoder.step(frame.unsqueeze(0),
                                        [h.unsqueeze(0) for h in hidden])
    cases["encoder_step"] = {
        "frame": _tolist(frame),
        "hidden": [_tolist(h) for h in hidden],
        "output": _tolist(out.squeeze(0)),
        "hidden_next": [_tolist(h.squeeze(0)) for h in hidden_next],
    }

    prev = rand(2, f) * 0.5
    h0 = bounded(cfg.predictor_hidden)
    c0 = bounded(cfg.predictor_hidden)
    state = (h0.reshape(1, 1, -1), c0.reshape(1, 1, -1))
    pred, (h1, c1) = net.predictor.step(prev.unsqueeze(0), state)
    cases["predictor_step"] = {
        "prev_frame": _tolist(prev),
        "h": _tolist(h0), "c": _tolist(c0),
        "output": _tolist(pred.squeeze(0)),
        "h_next": _tolist(h1.reshape(-1)), "c_next": _tolist(c1.reshape(-1)),
    }

    zeros = torch.zeros(1, 2, f)
    zstate = (torch.zeros(1, 1, cfg.predictor_hidden), torch.zeros(1, 1, cfg.predictor_hidden))
    zpred, (zh, zc) = net.predictor.step(zeros, zstate)
    cases["predictor_step_zero"] = {
        "output": _tolist(zpred.squeeze(0)),
        "h_next": _tolist(zh.reshape(-1)), "c_next": _tolist(zc.reshape(-1)),
    }

    enc_frame = rand(2, f)
    pred_mag = torch.abs(rand(f))
    ctx_in = rand(3, f, kt) * 0.5
    ctx_mid = rand(JOINER_HIDDEN_CHANNELS, f, kt) * 0.5
    stacked = torch.cat([enc_frame, pred_mag.unsqueeze(0)], dim=0).reshape(1, 3, f, 1)
    out, _, _ = net.joiner.step(stacked, ctx_in.unsqueeze(0), ctx_mid.unsqueeze(0))
    cases["joiner_step"] = {
        "enc_frame": _tolist(enc_frame),
        "pred_mag": _tolist(pred_mag),
        "ctx_in": _tolist(ctx_in), "ctx_mid": _tolist(ctx_mid),
        "output": _tolist(out.reshape(2, f)),
    }

    seq = rand(n_seq, 2, f) * 0.5
    outs = net(seq.permute(1, 2, 0).unsqueeze(0))  # (1, 2, F, T)
    cases["frn_step_seq"] = {
        "frames": _tolist(seq),
        "outputs": [_tolist(outs[0, :, :, i]) for i in range(n_seq)],
    }

    return {
        "schema": PARITY_SCHEMA,
        "seed": seed,
        "config": {k: int(v) for k, v in vars(cfg).items()},
        "cases": cases,
    }


def save_parity_vectors(vectors: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(vectors, fh, sort_keys=True, separators=(",", ":"))
