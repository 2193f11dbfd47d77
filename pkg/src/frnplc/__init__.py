"""Blind packet-loss concealment for 48 kHz speech.

A frame-causal recurrent concealment engine plus the surrounding tooling:
STFT/Mel signal primitives, a two-state Markov loss simulator, spectral
metrics, a streaming real-time wrapper, and a CLI for corpus experiments.
"""

from .dsp import (ComplexSpectrogram, MelFilterbank, StftConfig,
                  build_mel_filterbank, compressed_magnitude, istft, log_mel,
                  stft, stft_magnitude)
from .engine import Stream, StreamPoisonedError, benchmark_rtf
from .lossgen import (LossTrace, MarkovChain, expected_loss_rate,
                      generate_trace, packetize_and_apply, parse_trace_file,
                      random_packet_size)
from .metrics import Resolution, lsd, mr_stft_loss
from .model import (FrnConfig, FrnModel, FrnState, conceal_utterance,
                    forward_frames, parameter_count, random_archive,
                    weight_manifest)
from .weights import WeightArchive, load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "ComplexSpectrogram", "MelFilterbank", "StftConfig", "build_mel_filterbank",
    "compressed_magnitude", "istft", "log_mel", "stft", "stft_magnitude",
    "Stream", "StreamPoisonedError", "benchmark_rtf",
    "LossTrace", "MarkovChain", "expected_loss_rate", "generate_trace",
    "packetize_and_apply", "parse_trace_file", "random_packet_size",
    "Resolution", "lsd", "mr_stft_loss",
    "FrnConfig", "FrnModel", "FrnState", "conceal_utterance", "forward_frames",
    "parameter_count", "random_archive", "weight_manifest",
    "WeightArchive", "load_weights", "save_weights",
]
