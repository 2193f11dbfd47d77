"""Packet-loss simulation: two-state Markov chains, packetization, trace files.

The loss process has states N (non-loss) and L (loss) with stay probabilities
``stay_nonloss`` and ``stay_loss``. Traces mark one bit per packet, 1 = lost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Packet sizes (samples at 48 kHz) drawn when packetization is randomized.
PACKET_SIZE_CHOICES = (256, 512, 768, 1024, 1536)

#: Default packet size: 20 ms at 48 kHz.
DEFAULT_PACKET_SIZE = 960


class TraceError(ValueError):
    """Malformed trace file or trace/signal mismatch."""


@dataclass(frozen=True)
class MarkovChain:
    stay_nonloss: float  # probability of remaining in N
    stay_loss: float     # probability of remaining in L

    def __post_init__(self) -> None:
        for p in (self.stay_nonloss, self.stay_loss):
            if not 0.0 <= p <= 1.0:
                raise ValueError("stay probabilities must lie in [0, 1]")
        if self.stay_nonloss == 1.0 and self.stay_loss == 1.0:
            raise ValueError("degenerate chain: both states absorbing")


#: The four standard simulation chains (expected loss 10%, 16.7%, 35.7%, 50%).
STANDARD_CHAINS = (
    MarkovChain(0.9, 0.1),
    MarkovChain(0.9, 0.5),
    MarkovChain(0.5, 0.1),
    MarkovChain(0.5, 0.5),
)


@dataclass(frozen=True)
class LossTrace:
    packets: np.ndarray  # uint8 bits, 1 = lost
    packet_size: int = DEFAULT_PACKET_SIZE

    def __post_init__(self) -> None:
        packets = np.asarray(self.packets, dtype=np.uint8)
        if packets.ndim != 1 or packets.size == 0:
            raise TraceError("trace must contain at least one packet")
        if np.any(packets > 1):
            raise TraceError("trace bits must be 0 or 1")
        if self.packet_size <= 0:
            raise TraceError("packet size must be positive")
        object.__setattr__(self, "packets", packets)

    @property
    def n_packets(self) -> int:
        return self.packets.size

    @property
    def loss_rate(self) -> float:
        return float(self.packets.mean())


def expected_loss_rate(chain: MarkovChain) -> float:
    """Stationary probability of the loss state."""
    denom = 2.0 - chain.stay_nonloss - chain.stay_loss
    if denom <= 0.0:
        raise ValueError("degenerate chain: no unique stationary distribution")
    return (1.0 - chain.stay_nonloss) / denom


def generate_trace(chain: MarkovChain, n_packets: int, seed: int,
                   packet_size: int = DEFAULT_PACKET_SIZE) -> LossTrace:
    """Simulate the chain for ``n_packets`` steps, starting from stationarity.

    State dwell times are geometric, so each run length is drawn directly;
    this is distribution-identical to per-step transition sampling and
    reproducible for a given seed.
    """
    if n_packets < 1:
        raise ValueError("need at least one packet")
    rng = np.random.default_rng(seed)
    stationary_loss = expected_loss_rate(chain)
    state = 1 if rng.random() < stationary_loss else 0
    bits = np.empty(n_packets, dtype=np.uint8)
    pos = 0
    stay = (chain.stay_nonloss, chain.stay_loss)
    while pos < n_packets:
        p_stay = stay[state]
        run = n_packets - pos if p_stay >= 1.0 else int(rng.geometric(1.0 - p_stay))
        run = min(run, n_packets - pos)
        bits[pos : pos + run] = state
        pos += run
        state = 1 - state
    return LossTrace(bits, packet_size)


def random_packet_size(rng) -> int:
    """Uniform draw from the canonical packet-size set; accepts a seed or Generator."""
    rng = np.random.default_rng(rng)
    return int(rng.choice(PACKET_SIZE_CHOICES))


def packetize_and_apply(signal: np.ndarray, trace: LossTrace) -> np.ndarray:
    """Zero the samples of lost packets; received packets pass through bit-exactly."""
    signal = np.asarray(signal)
    n_needed = -(-len(signal) // trace.packet_size)  # ceil; last packet may be partial
    if trace.n_packets < n_needed:
        raise TraceError(
            f"trace underrun: {trace.n_packets} packets cover less than the "
            f"{n_needed} needed for {len(signal)} samples")
    mask = np.repeat(trace.packets[:n_needed].astype(bool), trace.packet_size)[: len(signal)]
    out = signal.copy()
    out[mask] = 0
    return out


def parse_trace_file(path, packet_size: int = DEFAULT_PACKET_SIZE) -> LossTrace:
    """Read a text trace: one 0/1 token per line, 1 = lost."""
    bits = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            token = line.strip()
            if not token:
                continue
            if token == "0":
                bits.append(0)
            elif token == "1":
                bits.append(1)
            else:
                raise TraceError(f"{path}: line {line_no}: expected 0 or 1, got {token!r}")
    if not bits:
        raise TraceError(f"{path}: empty trace file")
    return LossTrace(np.asarray(bits, dtype=np.uint8), packet_size)


def write_trace_file(trace: LossTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join("1" if b else "0" for b in trace.packets))
        fh.write("\n")


def loss_run_lengths(trace: LossTrace) -> np.ndarray:
    """Lengths of maximal runs of lost packets."""
    bits = np.concatenate([[0], trace.packets, [0]])
    edges = np.flatnonzero(np.diff(bits))
    return edges[1::2] - edges[0::2]


def trace_stats(trace: LossTrace) -> dict:
    runs = loss_run_lengths(trace)
    return {
        "n_packets": int(trace.n_packets),
        "packet_size": int(trace.packet_size),
        "loss_rate": trace.loss_rate,
        "n_loss_runs": int(runs.size),
        "mean_loss_run": float(runs.mean()) if runs.size else 0.0,
        "max_loss_run": int(runs.max()) if runs.size else 0,
    }
