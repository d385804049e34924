from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from leapdrive.fuzzy import MappingSpecSet, MembershipSpec, astrict, optimal_control_point


def test_membership_peak_foot_and_midpoint():
    spec = MembershipSpec(center=2.0, left_halfwidth=1.0, right_halfwidth=4.0)
    assert spec.membership(2.0) == 1.0
    assert spec.membership(6.0) == 0.0
    assert spec.membership(4.0) == pytest.approx(0.5)
    assert spec.membership(1.0) == 0.0
    assert spec.membership(1.5) == pytest.approx(0.5)
    assert spec.membership(100.0) == 0.0


def test_membership_spec_validation():
    with pytest.raises(ValueError):
        MembershipSpec(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        MembershipSpec(0.0, 1.0, -1.0)


def test_astrict_length_check_and_range():
    specs = [MembershipSpec(0.0, 1.0, 1.0), MembershipSpec(5.0, 2.0, 2.0)]
    out = astrict([0.5, 4.0], specs)
    assert np.all((out >= 0.0) & (out <= 1.0))
    assert out[0] == pytest.approx(0.5)
    assert out[1] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        astrict([0.5], specs)


@given(st.floats(min_value=-10, max_value=10), st.floats(min_value=0, max_value=5))
def test_astrict_nonincreasing_away_from_center(value, extra):
    spec = MembershipSpec(center=1.0, left_halfwidth=2.0, right_halfwidth=3.0)
    nearer = value
    farther = value + extra if value >= spec.center else value - extra
    assert spec.membership(farther) <= spec.membership(nearer) + 1e-12


def test_single_candidate_chosen():
    specs = [MembershipSpec(0.0, 1.0, 1.0)]
    assert optimal_control_point([[0.3]], specs) == 0


def test_max_min_rule_prefers_balanced_candidate():
    # memberships a=(0.9, 0.2) vs b=(0.6, 0.5): b wins on the worst component
    specs = [MembershipSpec(0.0, 1.0, 1.0), MembershipSpec(0.0, 1.0, 1.0)]
    a = [0.1, 0.8]
    b = [0.4, 0.5]
    assert np.min(astrict(a, specs)) == pytest.approx(0.2)
    assert np.min(astrict(b, specs)) == pytest.approx(0.5)
    assert optimal_control_point([a, b], specs) == 1


def test_exact_tie_resolves_to_lowest_index():
    specs = [MembershipSpec(0.0, 1.0, 1.0)]
    assert optimal_control_point([[0.5], [-0.5]], specs) == 0


def test_dominated_candidate_never_selected():
    rng = np.random.default_rng(99)
    specs = [MembershipSpec(0.0, 1.0, 1.0), MembershipSpec(0.0, 1.0, 1.0)]
    for _ in range(100):
        candidates = [list(rng.uniform(-1, 1, 2)) for _ in range(4)]
        chosen = optimal_control_point(candidates, specs)
        worse = [abs(c) + 0.05 for c in candidates[chosen]]
        assert optimal_control_point(candidates + [worse], specs) == chosen


def test_reordering_moves_chosen_index_consistently():
    specs = [MembershipSpec(0.0, 1.0, 1.0), MembershipSpec(0.0, 1.0, 1.0)]
    candidates = [[0.9, 0.9], [0.1, 0.1], [0.5, 0.2]]
    first = optimal_control_point(candidates, specs)
    reordered = [candidates[1], candidates[2], candidates[0]]
    assert reordered[optimal_control_point(reordered, specs)] == candidates[first]


def test_empty_candidates_rejected():
    with pytest.raises(ValueError):
        optimal_control_point([], [MembershipSpec(0.0, 1.0, 1.0)])


def test_mapping_spec_set_validation():
    MappingSpecSet(("identity", "gradient_magnitude"))
    with pytest.raises(ValueError):
        MappingSpecSet(())
    with pytest.raises(ValueError):
        MappingSpecSet(("identity", "identity"))
