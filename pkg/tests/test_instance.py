import copy
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riskdp.instance import (
    ConstantsBundle,
    InstanceError,
    RiskSpec,
    c_max,
    compute_lipschitz_constants,
    instance_from_arrays,
    load_instance,
    rho_max,
    sensitivity_sequence,
    validate_instance,
)


def tiny_raw():
    return {
        "states": ["s"],
        "actions": ["a"],
        "Q": {"a": [[1.0]]},
        "c": [[0.0]],
        "d": [[0.0]],
        "horizon": 1,
    }


def test_three_state_instance_is_valid(three_state):
    assert three_state.n_states == 3 and three_state.n_actions == 2
    assert three_state.horizon == 3
    assert three_state.risk == RiskSpec.mean_semideviation(0.2, 2)
    assert three_state.transition[1, 0].tolist() == [0.4, 0.3, 0.3]
    assert three_state.stage_cost[2, 1] == 6.0


def test_row_sum_violation_is_reported(three_state_raw):
    three_state_raw["Q"]["1"][0] = [0.5, 0.5, 0.1]
    with pytest.raises(InstanceError) as err:
        validate_instance(three_state_raw)
    assert "row sum 1.1 ≠ 1 at (x=1,u=1)" in err.value.violations


def test_every_violation_is_listed(three_state_raw):
    three_state_raw["Q"]["2"][1] = [-0.1, 0.6, 0.5]
    three_state_raw["c"][0][0] = None
    three_state_raw["horizon"] = 0
    with pytest.raises(InstanceError) as err:
        validate_instance(three_state_raw)
    text = "\n".join(err.value.violations)
    assert "negative probability" in text
    assert "horizon" in text
    assert "c" in text and len(err.value.violations) >= 3


def test_degenerate_single_state_instance_is_valid():
    inst = validate_instance(tiny_raw())
    assert inst.n_states == 1 and inst.horizon == 1


def test_empty_admissible_set_is_rejected():
    raw = tiny_raw()
    raw["admissible"] = {"s": []}
    with pytest.raises(InstanceError, match="empty"):
        validate_instance(raw)


def test_negative_constraint_cost_suggests_shift():
    raw = tiny_raw()
    raw["d"] = [[-0.5]]
    with pytest.raises(InstanceError) as err:
        validate_instance(raw)
    assert "shift d and r0" in err.value.violations[0]


def test_malformed_risk_is_rejected():
    raw = tiny_raw()
    raw["risk"] = {"kind": "cvar", "alpha": 1.5}
    with pytest.raises(InstanceError):
        validate_instance(raw)


def test_validation_is_idempotent(three_state):
    assert validate_instance(three_state) is three_state


def test_instance_arrays_are_read_only(three_state):
    with pytest.raises(ValueError):
        three_state.transition[0, 0, 0] = 1.0


def test_to_dict_round_trip(three_state):
    again = validate_instance(json.loads(json.dumps(three_state.to_dict())))
    assert np.array_equal(again.transition, three_state.transition)
    assert np.array_equal(again.stage_cost, three_state.stage_cost)
    assert again.risk == three_state.risk


def test_load_instance_reads_file(tmp_path, three_state_raw):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(three_state_raw))
    assert load_instance(path).horizon == 3


def test_lipschitz_constants_of_three_state(three_state):
    m_c, m_d, m_q = compute_lipschitz_constants(three_state)
    assert m_c == pytest.approx(2.0, abs=1e-12)
    assert m_d == pytest.approx(0.4, abs=1e-12)
    assert m_q == pytest.approx(0.4, abs=1e-12)


def test_lipschitz_constants_vanish_for_identical_actions():
    q = np.full((2, 2, 2), 0.5)
    inst = instance_from_arrays([[1, 1], [2, 2]], [[0.1, 0.1], [0.2, 0.2]], q, 2)
    assert compute_lipschitz_constants(inst) == (0.0, 0.0, 0.0)


def test_lipschitz_constants_vanish_with_one_action_per_state(three_state_raw):
    three_state_raw["admissible"] = {"1": ["1"], "2": ["2"], "3": ["1"]}
    assert compute_lipschitz_constants(validate_instance(three_state_raw)) == (0.0, 0.0, 0.0)


def test_shared_embedding_is_an_error(three_state_raw):
    three_state_raw["actions"][1]["embedding"] = 1.0
    with pytest.raises(ValueError):
        compute_lipschitz_constants(validate_instance(three_state_raw))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10.0))
def test_lipschitz_constants_scale_with_costs(factor):
    rng = np.random.default_rng(3)
    c = rng.uniform(0, 5, (3, 2))
    d = rng.uniform(0, 1, (3, 2))
    q = rng.dirichlet(np.ones(3), size=(3, 2))
    base = compute_lipschitz_constants(instance_from_arrays(c, d, q, 2))
    scaled = compute_lipschitz_constants(instance_from_arrays(factor * c, factor * d, q, 2))
    assert scaled[0] == pytest.approx(factor * base[0], rel=1e-12)
    assert scaled[1] == pytest.approx(factor * base[1], rel=1e-12)
    assert scaled[2] == pytest.approx(base[2], rel=1e-12)


def test_c_max_examples(three_state):
    assert c_max(three_state) == 6.0
    q = np.full((1, 2, 1), 1.0)
    assert c_max(instance_from_arrays([[0.0, 0.0]], [[0, 0]], q, 1)) == 0.0
    assert c_max(instance_from_arrays([[-7.0, 3.0]], [[0, 0]], q, 1)) == 7.0


def test_rho_max_is_largest_constraint_cost(three_state):
    assert rho_max(three_state) == 0.6


def test_sensitivity_sequence_example():
    mv = sensitivity_sequence(2.0, 0.4, 6.0, 0.5, 3)
    assert mv == pytest.approx((4.75, 2.7, 1.0, 0.0), abs=1e-12)


def test_constants_bundle_rejects_negative_mr(three_state):
    with pytest.raises(ValueError):
        ConstantsBundle.from_instance(three_state, -0.1)
    bundle = ConstantsBundle.from_instance(three_state, 0.5)
    assert bundle.c_max == 6.0 and len(bundle.M_V) == 4


def test_risk_spec_checked_constructors():
    with pytest.raises(ValueError):
        RiskSpec.cvar(0.0)
    with pytest.raises(ValueError):
        RiskSpec.mean_semideviation(1.5)
    with pytest.raises(ValueError):
        RiskSpec.mean_semideviation(0.2, order=3)
    spec = RiskSpec.cvar(0.25)
    assert RiskSpec.from_dict(spec.to_dict()) == spec
