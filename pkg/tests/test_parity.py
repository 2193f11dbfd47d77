import numpy as np

from frnplc.model import TINY_CONFIG, FrnModel, random_archive
from frnplc.parity import (REL_TOL, export_parity_vectors, load_parity_vectors,
                           max_rel_error, replay_parity_vectors, save_parity_vectors)


def test_self_replay_is_exact(tiny_model):
    vectors = export_parity_vectors(tiny_model, seed=5)
    errors = replay_parity_vectors(tiny_model, vectors)
    assert set(errors) == {"encoder_step", "predictor_step", "predictor_step_zero",
                           "joiner_step", "frn_step_seq"}
    assert all(err == 0.0 for err in errors.values())


def test_includes_zero_state_first_frame_case(tiny_model):
    vectors = export_parity_vectors(tiny_model, seed=5)
    assert "predictor_step_zero" in vectors["cases"]


def test_file_round_trip_and_checksum_stable(tmp_path, tiny_model):
    vectors = export_parity_vectors(tiny_model, seed=9)
    p1, p2 = tmp_path / "v1.json", tmp_path / "v2.json"
    save_parity_vectors(vectors, p1)
    save_parity_vectors(export_parity_vectors(tiny_model, seed=9), p2)
    assert p1.read_bytes() == p2.read_bytes()
    loaded = load_parity_vectors(p1)
    errors = replay_parity_vectors(tiny_model, loaded)
    assert all(err == 0.0 for err in errors.values())


def test_replay_detects_wrong_weights(tiny_model):
    vectors = export_parity_vectors(tiny_model, seed=5)
    other = FrnModel(random_archive(TINY_CONFIG, seed=123))
    errors = replay_parity_vectors(other, vectors)
    assert max(errors.values()) > REL_TOL


def test_max_rel_error_floor():
    # Deviations at the absolute floor map exactly onto the relative threshold.
    assert max_rel_error(np.array([1e-6]), np.array([0.0])) == REL_TOL
    assert max_rel_error(np.array([2.0002]), np.array([2.0])) == \
        np.abs(2.0002 - 2.0) / (2.0 + 1e-2)
    assert max_rel_error(np.array([5e-8]), np.array([0.0])) < REL_TOL
