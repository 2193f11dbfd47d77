import pytest
import torch

from frntrain import data
from frntrain.model import TINY_CONFIG, FrnNet


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    data.synth_toy_corpus(out, n_files=6, seconds=3.5, seed=0)
    return out


@pytest.fixture()
def tiny_net():
    torch.manual_seed(7)
    return FrnNet(TINY_CONFIG)
