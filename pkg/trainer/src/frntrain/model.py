"""Torch definition of the concealment network.

This mirrors, sublayer for sublayer, the inference engine that consumes the
exported archives: encoder (input projection + GELU, residual blocks of
affine-norm/GRU and affine-norm/MLP, output projection), log-Mel LSTM
magnitude predictor with an exp/linear/abs inverse-Mel head, and a two-layer
causal grouped-conv joiner fed by previous-output feedback.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .dsp import LOG_FLOOR, frame_magnitude, mel_filterbank

JOINER_HIDDEN_CHANNELS = 9
JOINER_KERNEL = 3  # square (freq, time) kernels
JOINER_GROUPS1 = 3


@dataclass(frozen=True)
class NetConfig:
    n_bins: int = 480
    dim: int = 384
    mlp_hidden: int = 768
    n_blocks: int = 4
    n_mels: int = 64
    predictor_hidden: int = 512


FULL_CONFIG = NetConfig()
TINY_CONFIG = NetConfig(n_bins=480, dim=48, mlp_hidden=96, n_blocks=2,
                        n_mels=16, predictor_hidden=64)
#: Toy-training size: the projection width must exceed the toy corpus's frame
#: manifold rank (about two dimensions per active harmonic), otherwise the
#: linear decoder caps passthrough fidelity no matter how long training runs;
#: passthrough transparency on received frames is what separates concealment
#: from zero-fill.
TOY_NET_CONFIG = NetConfig(n_bins=480, dim=192, mlp_hidden=256, n_blocks=2,
                           n_mels=32, predictor_hidden=128)


class Affine(nn.Module):
    def __init__(self, dim: int):
        super().__init__()
        self.scale = nn.Parameter(torch.ones(dim))
        self.bias = nn.Parameter(torch.zeros(dim))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x * self.scale + self.bias


class EncoderBlock(nn.Module):
    def __init__(self, dim: int, mlp_hidden: int):
        super().__init__()
        self.rnn_norm = Affine(dim)
        self.gru = nn.GRU(dim, dim)
        self.mlp_norm = Affine(dim)
        self.fc1 = nn.Linear(dim, mlp_hidden)
        self.fc2 = nn.Linear(mlp_hidden, dim)

    def forward(self, x: torch.Tensor,
                h0: torch.Tensor | None = None) -> tuple[torch.Tensor, torch.Tensor]:
        # x: (T, B, dim)
        r, h_last = self.gru(self.rnn_norm(x), h0)
        x = x + r
        m = self.fc2(F.gelu(self.fc1(self.mlp_norm(x))))
        return x + m, h_last


class Encoder(nn.Module):
    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        self.proj_in = nn.Linear(2 * cfg.n_bins, cfg.dim)
        self.blocks = nn.ModuleList(EncoderBlock(cfg.dim, cfg.mlp_hidden)
                                    for _ in range(cfg.n_blocks))
        self.proj_out = nn.Linear(cfg.dim, 2 * cfg.n_bins)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        # frames: (B, 2, F, T) -> (B, 2, F, T)
        b, _, n_bins, t = frames.shape
        x = frames.reshape(b, 2 * n_bins, t).permute(2, 0, 1)  # (T, B, 2F)
        x = F.gelu(self.proj_in(x))
        for block in self.blocks:
            x, _ = block(x)
        out = self.proj_out(x)
        return out.permute(1, 2, 0).reshape(b, 2, n_bins, t)

    def step(self, frame_flat: torch.Tensor,
             hidden: list[torch.Tensor]) -> tuple[torch.Tensor, list[torch.Tensor]]:
        """Single-frame update with explicit per-block hidden states.

        frame_flat: (B, 2F); hidden: n_blocks tensors of shape (B, dim).
        """
        x = F.gelu(self.proj_in(frame_flat)).unsqueeze(0)  # (1, B, dim)
        hidden_next = []
        for block, h in zip(self.blocks, hidden):
            x, h_last = block(x, h.unsqueeze(0))
            hidden_next.append(h_last.squeeze(0))
        return self.proj_out(x.squeeze(0)), hidden_next


class Predictor(nn.Module):
    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        fb = torch.tensor(mel_filterbank(cfg.n_mels), dtype=torch.float32)
        self.register_buffer("mel_fb", fb)
        self.lstm = nn.LSTM(cfg.n_mels, cfg.predictor_hidden)
        self.to_mel = nn.Linear(cfg.predictor_hidden, cfg.n_mels)
        self.inv_mel = nn.Linear(cfg.n_mels, cfg.n_bins)

    def features(self, mag: torch.Tensor) -> torch.Tensor:
        return torch.log(mag @ self.mel_fb.T + LOG_FLOOR)

    def head(self, lstm_out: torch.Tensor) -> torch.Tensor:
        # The exponent clamp is inactive for any plausible magnitude scale
        # (exp(25) ~ 7e10); it exists to break runaway feedback during joint
        # training, where an overflow here would poison the whole graph.
        return torch.abs(self.inv_mel(torch.exp(self.to_mel(lstm_out).clamp(max=25.0))))

    def forward_sequence(self, mags: torch.Tensor) -> torch.Tensor:
        """Teacher-forced magnitude sequence (T, B, F) -> predictions (T, B, F)."""
        out, _ = self.lstm(self.features(mags))
        return self.head(out)

    def step(self, prev_frame: torch.Tensor, state=None):
        """prev_frame: (B, 2, F) previous complex output frame."""
        mag = frame_magnitude(prev_frame[:, 0], prev_frame[:, 1])
        out, state = self.lstm(self.features(mag).unsqueeze(0), state)
        return self.head(out.squeeze(0)), state


class Joiner(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, JOINER_HIDDEN_CHANNELS, JOINER_KERNEL,
                               groups=JOINER_GROUPS1)
        self.conv2 = nn.Conv2d(JOINER_HIDDEN_CHANNELS, 2, JOINER_KERNEL)

    def step(self, stacked: torch.Tensor, ctx_in: torch.Tensor,
             ctx_mid: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """stacked: (B, 3, F, 1) current frame; ctx_*: the two past frames."""
        window1 = torch.cat([ctx_in, stacked], dim=-1)
        mid = self.conv1(F.pad(window1, (0, 0, 1, 1)))  # (B, 9, F, 1)
        window2 = torch.cat([ctx_mid, mid], dim=-1)
        out = self.conv2(F.pad(window2, (0, 0, 1, 1)))  # (B, 2, F, 1)
        return out, window1[..., 1:], window2[..., 1:]


class FrnNet(nn.Module):
    def __init__(self, cfg: NetConfig = FULL_CONFIG):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.predictor = Predictor(cfg)
        self.joiner = Joiner()

    def forward(self, frames: torch.Tensor, mode: str = "full",
                enc: torch.Tensor | None = None) -> torch.Tensor:
        """(B, 2, F, T) input frames -> (B, 2, F, T) output frames.

        The predictor consumes the previous *output* frame, so the joiner loop
        is sequential over time; the encoder runs on the whole sequence. A
        precomputed encoder output may be passed to avoid recomputing it.
        """
        if enc is None:
            enc = self.encoder(frames)
        if mode == "encoder_only":
            return enc
        b, _, n_bins, t = frames.shape
        kt = JOINER_KERNEL - 1
        prev = frames.new_zeros(b, 2, n_bins)
        ctx_in = frames.new_zeros(b, 3, n_bins, kt)
        ctx_mid = frames.new_zeros(b, JOINER_HIDDEN_CHANNELS, n_bins, kt)
        pred_state = None
        outs = []
        for i in range(t):
            pred, pred_state = self.predictor.step(prev, pred_state)
            stacked = torch.cat([enc[:, :, :, i], pred.unsqueeze(1)], dim=1).unsqueeze(-1)
            out, ctx_in, ctx_mid = self.joiner.step(stacked, ctx_in, ctx_mid)
            prev = out[..., 0]
            outs.append(out)
        return torch.cat(outs, dim=-1)

    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())
