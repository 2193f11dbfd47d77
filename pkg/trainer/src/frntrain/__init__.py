"""Training side of the 48 kHz packet-loss-concealment engine.

Defines the network in torch, trains it (predictor pretraining followed by
joint training on zero-filled loss pairs), and exports weight archives plus
parity vectors in the formats the inference engine consumes.
"""

from .model import FULL_CONFIG, TINY_CONFIG, FrnNet, NetConfig
from .train import TOY_CONFIG, TrainConfig, run_training, train_joint

__all__ = ["FULL_CONFIG", "TINY_CONFIG", "FrnNet", "NetConfig",
           "TOY_CONFIG", "TrainConfig", "run_training", "train_joint"]
