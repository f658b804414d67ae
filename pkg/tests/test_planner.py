import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ipram.domain import FrequencyTable, PlanningError, ValidationError, _ceil_guarded
from ipram.planner import min_block_size, plan_blocks, psi, reproduce_table1, solve_theta
from oracles import block_size_by_bisection, theta_by_bisection

TABLE1 = [
    [11, 9, 8, 7, 6, 5, 5],
    [6, 5, 5, 4, 4, 3, 3],
    [5, 4, 3, 3, 3, 2, 2],
    [4, 3, 3, 2, 2, 2, 2],
    [3, 3, 2, 2, 2, 2, 2],
    [3, 2, 2, 2, 2, 2, 2],
    [2, 2, 2, 2, 2, 2, 2],
    [2, 2, 2, 2, 2, 2, 2],
    [2, 2, 2, 2, 2, 2, 2],
    [2, 2, 2, 2, 2, 2, 2],
]


@pytest.mark.parametrize("t1", [1, 2, 7, 50])
def test_psi_endpoints(t1):
    assert psi(t1, 0) == pytest.approx(1 / t1, abs=1e-15)
    assert psi(t1, t1) == 0


def test_psi_at_worked_theta():
    assert psi(2, 1.656854) == pytest.approx(0.1, abs=1e-6)


def test_psi_range_checked():
    with pytest.raises(ValueError):
        psi(2, 2.5)
    with pytest.raises(ValueError):
        psi(2, -0.1)


@pytest.mark.parametrize(
    "t1, xi, expected",
    [
        (2, 0.1, 1.656854),
        (1, 0.1, 0.908327),  # bisection oracle: 0.9083269131959817
        (3, 0.25, 1.302776),  # bisection oracle: 1.3027756377319948
    ],
)
def test_solve_theta_examples(t1, xi, expected):
    assert solve_theta(t1, xi) == pytest.approx(expected, abs=1e-6)


def test_solve_theta_closed_form():
    assert solve_theta(2, 0.1) == pytest.approx(4 * (math.sqrt(2) - 1), abs=1e-12)
    assert solve_theta(3, 0.25) == pytest.approx((-1 + math.sqrt(13)) / 2, abs=1e-12)


@pytest.mark.parametrize("t1, xi", [(2, 0.5), (4, 0.25), (5, 0.3), (10, 0.1)])
def test_solve_theta_rejects_degenerate(t1, xi):
    with pytest.raises(ValueError, match="no perturbation"):
        solve_theta(t1, xi)


@pytest.mark.parametrize(
    "t1, xi, expected", [(1, 0.1, 11), (2, 0.25, 3), (10, 0.3, 2), (4, 0.175, 2)]
)
def test_min_block_size_examples(t1, xi, expected):
    assert min_block_size(t1, xi) == expected


def test_table1_full():
    table = reproduce_table1()
    assert table.shape == (10, 7)
    assert table.tolist() == TABLE1
    assert table[0, 1] == 9 and table[6, 0] == 2 and table[2, 2] == 3


def test_ceil_guard_snaps_to_integer():
    assert _ceil_guarded(3.0000000001) == 3
    assert _ceil_guarded(3.001) == 4
    assert _ceil_guarded(2.9999999999) == 3


@given(st.integers(1, 50), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_psi_strictly_decreasing(t1, u, v):
    lo, hi = sorted((u * t1, v * t1))
    assume(hi - lo > 1e-9 * t1)
    assert psi(t1, lo) > psi(t1, hi)


def _valid_pair(t1, frac):
    # xi strictly inside (0.01, 1/t1)
    lo, hi = 0.01, 1 / t1
    return lo + frac * (hi - lo)


@given(st.integers(1, 50), st.floats(0.001, 0.999))
def test_solve_theta_hits_level(t1, frac):
    xi = _valid_pair(t1, frac)
    assume(xi * t1 < 1 - 1e-9)
    theta = solve_theta(t1, xi)
    assert 0 < theta < t1
    assert psi(t1, theta) == pytest.approx(xi, abs=1e-10)


def test_quadratic_matches_bisection_sweep():
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(1000):
        t1 = int(rng.integers(1, 51))
        xi = rng.uniform(0.01, 1 / t1)
        if xi * t1 >= 1 - 1e-9:
            continue
        worst = max(worst, abs(solve_theta(t1, xi) - theta_by_bisection(t1, xi)))
    assert worst < 1e-9


@given(st.integers(1, 49), st.floats(0.01, 0.99))
def test_min_block_size_monotone_in_t1(t1, xi):
    assert min_block_size(t1 + 1, xi) <= min_block_size(t1, xi)


@given(st.integers(1, 50), st.floats(0.01, 0.98), st.floats(0.0, 0.01))
def test_min_block_size_monotone_in_xi(t1, xi, dxi):
    assert min_block_size(t1, xi + dxi) <= min_block_size(t1, xi)


@given(st.integers(1, 50), st.floats(0.01, 0.99))
def test_min_block_size_matches_bisection_oracle(t1, xi):
    assert min_block_size(t1, xi) == block_size_by_bisection(t1, xi)


WORKED = FrequencyTable(tuple("12345678"), (2, 205, 431, 106, 230, 221, 611, 194))


def test_plan_worked_example():
    plan = plan_blocks(WORKED, 0, 0.1)
    assert plan.k1 == 6
    assert plan.target_block == (0, 1, 3, 4, 5, 7)  # categories 1, 2, 4, 5, 6, 8
    assert plan.theta == pytest.approx(1.656854, abs=1e-6)
    assert (2,) in plan.blocks and (6,) in plan.blocks
    assert plan.xi_achieved == plan.xi_requested == 0.1
    assert not plan.relaxed


def test_plan_noop_above_threshold():
    plan = plan_blocks(FrequencyTable(("a", "b"), (5, 9)), 0, 0.25)
    assert plan.is_noop and plan.theta == 0
    assert all(len(b) == 1 for b in plan.blocks)


def test_plan_noop_at_threshold():
    # T1 == 1/xi: the unperturbed risk 1/T1 already equals xi
    plan = plan_blocks(FrequencyTable(("a", "b"), (4, 9)), 0, 0.25)
    assert plan.is_noop


def test_plan_relaxation():
    # block sizes for T1=1 along xi = 1/9 .. 1/3 are 10..4 (bisection oracle); only 3 categories exist
    plan = plan_blocks(FrequencyTable(("a", "b", "c"), (1, 5, 9)), 0, 0.1)
    assert plan.relaxed
    assert plan.xi_achieved == 0.5
    assert plan.k1 == 3
    assert plan.theta == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-6)
    assert plan.theta == pytest.approx(0.618034, abs=1e-6)


def test_plan_relaxation_to_noop():
    # no category is as large as T1=3; at xi=1/3 the unperturbed risk suffices
    plan = plan_blocks(FrequencyTable(("a", "b"), (3, 1)), 0, 0.1)
    assert plan.is_noop and plan.xi_achieved == pytest.approx(1 / 3)


def test_plan_relaxation_small_block():
    # T1=2 with one larger category: K1(2, 1/3) = 2 is the first feasible level
    plan = plan_blocks(FrequencyTable(("a", "b"), (2, 3)), 0, 0.1)
    assert plan.k1 == 2 and plan.xi_achieved == pytest.approx(1 / 3)


def test_plan_infeasible():
    with pytest.raises(PlanningError) as err:
        plan_blocks(FrequencyTable(("a", "b", "c"), (1, 0, 0)), 0, 0.1)
    assert err.value.best_xi == 1.0
    with pytest.raises(PlanningError) as err:
        plan_blocks(FrequencyTable(("a", "b"), (1, 5)), 0, 0.1)
    # one qualifying category supports theta up to 1/2: psi(1, 1/2) = 2/3
    assert err.value.best_xi == pytest.approx(2 / 3)


def test_plan_member_selection_ties():
    freq = FrequencyTable(tuple("abcde"), (2, 7, 3, 3, 50))
    plan = plan_blocks(freq, 0, 0.25)  # K1(2, 0.25) = 3
    assert plan.target_block == (0, 2, 3)


def test_plan_excludes_smaller_categories():
    freq = FrequencyTable(tuple("abcdef"), (3, 1, 2, 40, 50, 60))
    plan = plan_blocks(freq, 0, 0.15)  # K1(3, 0.15) = 3
    assert plan.target_block == (0, 3, 4)


def test_plan_rejects_bad_input():
    with pytest.raises(ValidationError):
        plan_blocks(WORKED, 8, 0.1)
    with pytest.raises(ValidationError):
        plan_blocks(WORKED, 0, 1.0)
    with pytest.raises(ValidationError, match="no records"):
        plan_blocks(FrequencyTable(("a", "b"), (0, 3)), 0, 0.1)


@st.composite
def tables(draw):
    k = draw(st.integers(2, 12))
    counts = draw(st.lists(st.integers(1, 40), min_size=k, max_size=k))
    target = draw(st.integers(0, k - 1))
    xi = draw(st.floats(0.02, 0.9))
    return FrequencyTable(tuple(f"c{i}" for i in range(k)), tuple(counts)), target, xi


@given(tables())
def test_plan_hypotheses_hold(case):
    freq, target, xi = case
    try:
        plan = plan_blocks(freq, target, xi)
    except PlanningError:
        return
    t1 = freq.counts[target]
    assert plan.xi_achieved >= xi
    if plan.is_noop:
        assert t1 * plan.xi_achieved >= 1 - 1e-12
        return
    assert plan.k1 >= math.ceil(t1 / (t1 - plan.theta) - 1e-9)
    assert all(freq.counts[j] >= t1 for j in plan.target_block)
    assert psi(t1, plan.theta) == pytest.approx(plan.xi_achieved, abs=1e-10)
