import json

from frnplc.model import FrnModel, parameter_count
from frnplc.model import TINY_CONFIG as ENGINE_TINY
from frnplc.parity import load_parity_vectors, replay_parity_vectors
from frnplc.weights import load_weights

from frntrain.cli import main as trainer_main
from frntrain.export import (export_archive, export_parity_vectors,
                             export_training_curve, save_parity_vectors)


def test_archive_loads_in_engine(tmp_path, tiny_net):
    path = tmp_path / "t.frnw"
    export_archive(tiny_net, path)
    archive = load_weights(path)
    assert archive.metadata["arch"] == "frn-v1"
    assert archive.metadata["gru_gate_order"] == "r,z,n"
    model = FrnModel(archive)
    assert model.n_parameters() == parameter_count(ENGINE_TINY) == tiny_net.n_parameters()


def test_archive_bytes_deterministic(tmp_path, tiny_net):
    p1, p2 = tmp_path / "a.frnw", tmp_path / "b.frnw"
    export_archive(tiny_net, p1)
    export_archive(tiny_net, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_parity_vector_checksum_stable(tmp_path, tiny_net):
    p1, p2 = tmp_path / "v1.json", tmp_path / "v2.json"
    save_parity_vectors(export_parity_vectors(tiny_net, seed=3), p1)
    save_parity_vectors(export_parity_vectors(tiny_net, seed=3), p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_bytes() != json.dumps(
        export_parity_vectors(tiny_net, seed=4), sort_keys=True).encode()


def test_tiny_parity_replay(tmp_path, tiny_net):
    archive_path = tmp_path / "t.frnw"
    vectors_path = tmp_path / "v.json"
    export_archive(tiny_net, archive_path)
    save_parity_vectors(export_parity_vectors(tiny_net, seed=5), vectors_path)
    model = FrnModel(load_weights(archive_path))
    errors = replay_parity_vectors(model, load_parity_vectors(vectors_path))
    assert max(errors.values()) < 1e-4


def test_training_curve_csv(tmp_path):
    rows = [{"step": 0, "loss": 1.5}, {"step": 1, "loss": 0.75}]
    path = tmp_path / "curve.csv"
    export_training_curve(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "step,loss"
    assert lines[1].startswith("0,1.5")


def test_cli_make_corpus_and_export_random(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert trainer_main(["make-corpus", "--out", str(corpus), "--files", "2",
                         "--seconds", "1.0"]) == 0
    assert len(list(corpus.glob("*.wav"))) == 2
    out = tmp_path / "r.frnw"
    vec = tmp_path / "r.json"
    assert trainer_main(["export-random", "--out", str(out), "--vectors", str(vec),
                         "--preset", "tiny", "--seed", "1"]) == 0
    model = FrnModel(load_weights(out))
    errors = replay_parity_vectors(model, load_parity_vectors(vec))
    assert max(errors.values()) < 1e-4
