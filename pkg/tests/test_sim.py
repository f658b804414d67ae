import math

import numpy as np
import pytest

from ipram import datasets
from ipram.domain import BlockPlan, FrequencyTable, TransitionMatrix, ValidationError
from ipram.matrix import build_ifpr
from ipram.perturb import CategoricalColumn, mix, perturb
from ipram.risk import correct_match_probability, odds_from_matrix, r1_closed_form_1, r1_exact
from ipram.sim import (
    estimate_conditional_r1,
    intruder_game,
    run_replicates,
    simulate_replicates,
)


@pytest.fixture(scope="module")
def worked_report(worked, worked_column):
    _, _, m = worked
    return run_replicates(worked_column, m, 1000, master_seed=20260101, target_category=0,
                          target_record=datasets.TARGET_RECORD)


def test_identity_matrix_report():
    col = CategoricalColumn(np.repeat([0, 1, 2], [4, 5, 6]), ("a", "b", "c"))
    rep = run_replicates(col, TransitionMatrix.identity(3), 50, 1, target_category=0)
    assert rep.mse_per_category == (0.0, 0.0, 0.0)
    assert rep.avg_correct_match == 0.25
    assert rep.singleton_categories == (0, 1, 2)


def test_worked_simulation_bands(worked_report):
    rep = worked_report
    assert rep.replicates == 1000
    assert rep.mse_per_category[2] == 0.0 and rep.mse_per_category[6] == 0.0
    for j in (0, 1, 3, 4, 5, 7):
        assert 1e-7 < rep.mse_per_category[j] < 2e-6
    assert 0.06 <= rep.avg_correct_match <= 0.09
    assert rep.singleton_categories == (2, 6)


def test_worked_simulation_mean_counts(worked_report):
    for got, t in zip(worked_report.mean_counts, datasets.COUNTS):
        assert got == pytest.approx(t, abs=2.0)


def test_avg_correct_match_near_exact(worked, worked_report):
    # per-replicate values lie in [0, 1]; 0.02 is several standard errors at 1000 draws
    freq, _, m = worked
    exact = correct_match_probability(odds_from_matrix(m, freq, 0))
    assert exact == pytest.approx(0.07849, abs=5e-5)
    assert abs(worked_report.avg_correct_match - exact) < 0.02
    assert worked_report.avg_correct_match < 0.1


def test_single_replicate(worked, worked_column):
    _, _, m = worked
    rep = run_replicates(worked_column, m, 1, 9, 0)
    assert rep.replicates == 1 and len(rep.mse_per_category) == 8


def test_replicates_validated(worked, worked_column):
    _, _, m = worked
    with pytest.raises(ValueError):
        run_replicates(worked_column, m, 0, 9, 0)
    with pytest.raises(ValidationError):
        run_replicates(worked_column, m, 5, 9, 0, target_record=0 if worked_column.values[0] else 1)


def test_jobs_do_not_change_results(worked, worked_column):
    _, _, m = worked
    a = simulate_replicates(worked_column, m, 40, 3, 0, jobs=1)
    b = simulate_replicates(worked_column, m, 40, 3, 0, jobs=4)
    assert a == b


def test_intruder_game_cases():
    z = CategoricalColumn([1, 0, 1, 1], ("a", "b"))
    assert intruder_game(z, 1, 0, seed=0) is True
    assert intruder_game(z, 0, 0, seed=0) is False
    # no released record in the category
    assert intruder_game(CategoricalColumn([1, 1], ("a", "b")), 0, 0, seed=0) is False
    wins = sum(intruder_game(z, 0, 1, seed=s) for s in range(3000))
    assert abs(wins / 3000 - 1 / 3) < 0.03


def test_unbiased_counts_lopsided():
    # T = (1, 1000): invariance holds even though the small category is flooded
    freq = FrequencyTable(("a", "b"), (1, 1000))
    plan = BlockPlan(0, 0.5, 0.5, 0.5, ((0, 1),), 2)
    m = build_ifpr(freq, plan)
    col = CategoricalColumn(np.repeat([0, 1], [1, 1000]), ("a", "b"))
    rep = run_replicates(col, m, 4000, 17, 0)
    # S_a = Bernoulli(0.5) + Binomial(1000, 0.0005); Var = 0.25 + 0.49975
    se = math.sqrt(0.25 + 1000 * 0.0005 * 0.9995) / math.sqrt(4000)
    assert abs(rep.mean_counts[0] - 1) <= 4 * se


def test_conditional_estimate_closed_form(worked):
    freq, plan, m = worked
    est = estimate_conditional_r1(freq, plan, m, 1, 400_000, seed=8)
    assert est.kept > 1000
    assert est.within(r1_closed_form_1(freq, plan))


def test_conditional_estimate_unreachable():
    freq = FrequencyTable(("a", "b"), (2, 3))
    plan = BlockPlan(0, 0.5, 0.5, 1.0, ((0, 1),), 2)
    m = build_ifpr(freq, plan)
    est = estimate_conditional_r1(freq, plan, m, 6, 1000, seed=1)
    assert est.kept == 0 and math.isnan(est.mean) and not est.within(0.2)


def test_conditional_estimate_rejects_noop():
    freq = FrequencyTable(("a", "b"), (5, 9))
    plan = BlockPlan(0, 0.25, 0.25, 0.0, ((0,), (1,)), 1)
    with pytest.raises(ValidationError):
        estimate_conditional_r1(freq, plan, build_ifpr(freq, plan), 1, 10, seed=0)


def test_block_arrival_shortcut_matches_full_perturbation():
    # the conditional estimator draws S1 from block binomials; full record-level
    # perturbation must give the same conditional risk
    freq = FrequencyTable(("a", "b", "c"), (2, 3, 4))
    plan = BlockPlan(0, 0.5, 0.5, 1.2, ((0, 1, 2),), 3)
    m = build_ifpr(freq, plan)
    col = CategoricalColumn(np.repeat([0, 1, 2], [2, 3, 4]), ("a", "b", "c"))
    hits, kept = 0.0, 0
    for r in range(20000):
        z = perturb(col, m, mix(31, r))
        s1 = int((z.values == 0).sum())
        if s1 == 2:
            kept += 1
            hits += (z.values[0] == 0) / 2
    odds = odds_from_matrix(m, freq, 0)
    mean = hits / kept
    se = math.sqrt(mean * (0.5 - mean) / kept)
    assert abs(mean - r1_exact(2, odds)) <= 4 * se
