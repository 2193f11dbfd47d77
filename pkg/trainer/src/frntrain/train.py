"""Joint training of the full network on zero-filled loss pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import data
from .dsp import n_frames, overlap_add, stft_frames
from .export import export_archive, export_training_curve
from .losses import mr_stft_loss
from .model import FULL_CONFIG, TOY_NET_CONFIG, FrnNet, NetConfig
from .pretrain import next_frame_l1, pretrain_predictor


@dataclass(frozen=True)
class TrainConfig:
    """Full-scale recipe; the toy preset shrinks duration, not lr or compression."""

    epochs: int = 150
    batch_size: int = 90
    lr: float = 1e-4
    crop_seconds: float = 3.0
    compression: float = 0.3
    chains: tuple = data.CHAINS
    packet_sizes: tuple = data.PACKET_SIZES
    # Feedback through the log-Mel front end produces rare gradient spikes
    # when predicted magnitudes sit near the log floor; clipping tames them.
    grad_clip: float = 1.0
    # The encoder is itself a reconstructing enhancer (the encoder-only
    # ablation synthesizes straight from its output), so its resynthesis
    # carries an auxiliary term of the same objective.
    encoder_aux_weight: float = 0.3
    # Steps actually executed per run; epochs * steps_per_epoch at full scale.
    pretrain_steps: int = 1000
    pretrain_batch_size: int = 16
    joint_steps: int = 2000
    n_items: int = 512
    net: NetConfig = FULL_CONFIG


#: Desk-scale preset: small crops, small batches, reduced dims; lr and the
#: compression exponent stay at their standard values.
TOY_CONFIG = TrainConfig(epochs=1, batch_size=4, crop_seconds=0.5,
                         pretrain_steps=7000, pretrain_batch_size=8,
                         joint_steps=1200, n_items=64,
                         encoder_aux_weight=1.0, net=TOY_NET_CONFIG)


def train_joint(net: FrnNet, lossy: torch.Tensor, clean: torch.Tensor,
                cfg: TrainConfig, seed: int = 0) -> list[dict]:
    """Minimize the multi-resolution objective on resynthesized output.

    The loss is taken on the fully-overlapped synthesis interior (one hop
    trimmed per side): edge samples are normalized by a near-zero window sum,
    and gradients through that division are large enough to overflow float32.
    Steps whose gradients still come out non-finite are skipped rather than
    letting a NaN clip coefficient poison every parameter.
    """
    rng = np.random.default_rng(seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    t = n_frames(lossy.shape[1])
    target_len = 960 + (t - 1) * 480
    hop = 480
    curve = []
    net.train()
    for step in range(cfg.joint_steps):
        idx = rng.integers(lossy.shape[0], size=min(cfg.batch_size, lossy.shape[0]))
        frames = stft_frames(lossy[idx])
        target = clean[idx][:, hop : target_len - hop]
        enc = net.encoder(frames)
        out = net(frames, enc=enc)
        loss = mr_stft_loss(overlap_add(out)[:, hop:-hop], target, alpha=cfg.compression)
        if cfg.encoder_aux_weight > 0:
            enc_loss = mr_stft_loss(overlap_add(enc)[:, hop:-hop], target,
                                    alpha=cfg.compression)
            loss = loss + cfg.encoder_aux_weight * enc_loss
        if not math.isfinite(loss.item()):
            raise RuntimeError(f"joint training diverged at step {step}: loss={loss.item()}")
        optimizer.zero_grad()
        loss.backward()
        grad_norm = torch.nn.utils.clip_grad_norm_(net.parameters(), cfg.grad_clip)
        if torch.isfinite(grad_norm):
            optimizer.step()
        curve.append({"step": step, "loss": float(loss.item()),
                      "grad_norm": float(grad_norm)})
    return curve


def run_training(corpus_dir, out_dir, cfg: TrainConfig = TOY_CONFIG,
                 seed: int = 0) -> dict:
    """Corpus -> pretrained predictor -> joint training -> archive + curves.

    A held-out slice of the crops scores the predictor's teacher-forced
    next-frame L1 before and after pretraining; joint training afterwards
    adapts the predictor to the output-feedback distribution, so that metric
    is only meaningful at the pretraining stage.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(seed)
    n_eval = max(4, cfg.n_items // 8)
    lossy, clean, _ = data.build_dataset(corpus_dir, cfg.n_items + n_eval,
                                         cfg.crop_seconds, seed=seed)
    lossy, clean, clean_eval = lossy[:-n_eval], clean[:-n_eval], clean[-n_eval:]
    net = FrnNet(cfg.net)
    untrained_l1 = next_frame_l1(net.predictor, clean_eval)
    pre_curve = pretrain_predictor(net.predictor, clean, cfg.pretrain_steps,
                                   cfg.pretrain_batch_size, lr=cfg.lr, seed=seed + 1)
    pretrained_l1 = next_frame_l1(net.predictor, clean_eval)
    export_training_curve(pre_curve, out_dir / "pretrain_curve.csv")
    joint_curve = train_joint(net, lossy, clean, cfg, seed=seed + 2)
    export_training_curve(joint_curve, out_dir / "joint_curve.csv")
    archive_path = out_dir / "trained.frnw"
    export_archive(net, archive_path, extra_metadata={"seed": seed})
    return {
        "archive": str(archive_path),
        "pretrain_first": pre_curve[0]["loss"], "pretrain_last": pre_curve[-1]["loss"],
        "untrained_next_frame_l1": untrained_l1,
        "pretrained_next_frame_l1": pretrained_l1,
        "joint_first": joint_curve[0]["loss"], "joint_last": joint_curve[-1]["loss"],
        "n_parameters": net.n_parameters(),
    }
