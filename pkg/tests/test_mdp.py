import numpy as np
import pytest

from bisimlab.mdp import (
    DeterministicMDP,
    counting_abstract_mdp,
    load_mdp_json,
    random_mdp,
    save_mdp_json,
    validate_mdp,
)


def test_validate_wellformed():
    assert validate_mdp(counting_abstract_mdp(8, 4)) == []


def test_validate_transition_out_of_range():
    m = counting_abstract_mdp(2, 1)
    m.transition[0, 0] = 3  # == |O|
    assert any("transition out of range" in e for e in validate_mdp(m))


def test_validate_unnormalized_initial_dist():
    m = counting_abstract_mdp(2, 1)
    m.initial_dist = np.array([0.25, 0.25, 0.0])
    assert any("initial_dist not normalized" in e for e in validate_mdp(m))


def test_counting_8_4_tables():
    m = counting_abstract_mdp(8, 4)
    assert m.num_observations == 9
    assert m.num_actions == 2
    assert m.transition[8, 0] == 8  # inc clamps at the top
    assert m.transition[0, 1] == 0  # dec clamps at the bottom
    assert m.reward[4] == 1.0
    assert m.reward.sum() == 1.0
    assert np.allclose(m.initial_dist, 1.0 / 9)


def test_counting_degenerate_single_state():
    m = counting_abstract_mdp(0, 0)
    assert m.num_observations == 1
    assert m.transition.tolist() == [[0, 0]]
    assert m.reward[0] == 1.0


def test_counting_2_1_readoff():
    m = counting_abstract_mdp(2, 1)
    assert m.transition[0, 0] == 1
    assert m.transition[1, 0] == 2
    assert m.transition[2, 0] == 2
    assert m.transition[1, 1] == 0
    assert m.reward.tolist() == [0.0, 1.0, 0.0]


def test_counting_target_out_of_range():
    with pytest.raises(ValueError):
        counting_abstract_mdp(4, 7)


def test_random_mdp_single_state():
    m = random_mdp(1, 1, 1, np.random.default_rng(0))
    assert m.transition.tolist() == [[0]]
    assert validate_mdp(m) == []


def test_random_mdp_valid_and_deterministic():
    a = random_mdp(50, 4, 3, np.random.default_rng(7))
    b = random_mdp(50, 4, 3, np.random.default_rng(7))
    assert validate_mdp(a) == []
    assert np.array_equal(a.transition, b.transition)
    assert np.array_equal(a.aux, b.aux)
    assert len(np.unique(a.aux)) <= 3


def test_mdp_json_roundtrip(tmp_path):
    m = random_mdp(12, 3, 2, np.random.default_rng(3))
    path = str(tmp_path / "mdp.json")
    save_mdp_json(m, path)
    loaded = load_mdp_json(path)
    assert np.array_equal(loaded.transition, m.transition)
    assert np.allclose(loaded.aux, m.aux)
    assert np.allclose(loaded.initial_dist, m.initial_dist)


def test_load_rejects_invalid(tmp_path):
    m = counting_abstract_mdp(2, 1)
    m.initial_dist = np.array([0.9, 0.0, 0.0])
    path = str(tmp_path / "bad.json")
    save_mdp_json(m, path)
    with pytest.raises(ValueError):
        load_mdp_json(path)
