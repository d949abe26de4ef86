from __future__ import annotations

import time

import pytest

from mtdgrid import GammaTracker, PerturbationPlan, PlanError, PlannerConfig, compare_plan, load_case, plan_branches
from mtdgrid.grid import covered_buses


def test_deterministic_for_seed(ieee14):
    a = plan_branches(ieee14, PlannerConfig(budget=9, rng_seed=4))
    b = plan_branches(ieee14, PlannerConfig(budget=9, rng_seed=4))
    assert a.plan == b.plan


def test_budget_respected(ieee14):
    for budget in (1, 5, 9, 12):
        res = plan_branches(ieee14, PlannerConfig(budget=budget, rng_seed=1))
        assert len(res.selected) == budget
        assert res.unused_budget == 0


def test_budget_zero(ieee14):
    res = plan_branches(ieee14, PlannerConfig(budget=0))
    assert res.selected == ()
    assert res.dim_stealthy == ieee14.n


def test_budget_above_candidates(ieee14):
    res = plan_branches(ieee14, PlannerConfig(budget=5, candidates=(1, 2, 3)))
    assert sorted(res.selected) == [1, 2, 3]
    assert res.unused_budget == 2


@pytest.mark.parametrize("cands", [(), (1, 1), (0, 3), (1, 99)])
def test_bad_candidates(ieee14, cands):
    with pytest.raises(PlanError):
        plan_branches(ieee14, PlannerConfig(budget=2, candidates=cands))


def test_negative_budget():
    with pytest.raises(PlanError):
        PlannerConfig(budget=-1)


def test_gamma_nondecreasing_in_budget(ieee14):
    tracker = GammaTracker(ieee14)
    gammas = [plan_branches(ieee14, PlannerConfig(budget=b, rng_seed=2), tracker).gamma_minus_n for b in range(0, 14)]
    assert gammas == sorted(gammas)


def test_phase_one_steps_each_raise_gamma(ieee14):
    tracker = GammaTracker(ieee14)
    res = plan_branches(ieee14, PlannerConfig(budget=12, rng_seed=3), tracker)
    ratios = res.plan.ratios
    gamma = tracker.n
    for k in res.phase1:
        ext = {j: ratios[j] for j in res.phase1[: res.phase1.index(k) + 1]}
        assert tracker.gamma(ext) == gamma + 1
        gamma += 1


def test_phase_one_is_locally_maximal(ieee14):
    tracker = GammaTracker(ieee14)
    res = plan_branches(ieee14, PlannerConfig(budget=15, rng_seed=5), tracker)
    assert res.phase2_run
    base = PerturbationPlan(tuple((k, res.plan.ratios[k]) for k in res.phase1))
    for k in range(1, ieee14.l + 1):
        if k not in res.phase1:
            assert tracker.delta_gamma(base, k, 1.137) == 0


def test_coverage_phase_targets_new_buses(ieee14):
    res = plan_branches(ieee14, PlannerConfig(budget=10, rng_seed=0))
    before = covered_buses(ieee14, res.phase1)
    for k in res.phase2:
        assert not set(ieee14.branch(k).buses) & before


def test_compare_plan(ieee14, fig1):
    res = plan_branches(ieee14, PlannerConfig(budget=10, rng_seed=0))
    first_ten = PerturbationPlan(tuple((k, 0.8 + 0.035 * k) for k in range(1, 11)))
    assert compare_plan(ieee14, res.plan, first_ten).summary == ((6, 13), (8, 8))
    same = compare_plan(ieee14, first_ten, first_ten)
    assert same.reports[0] == same.reports[1]
    everything = PerturbationPlan(tuple((k, 0.83 + 0.07 * k) for k in range(1, 6)))
    assert compare_plan(fig1, PerturbationPlan(()), everything).summary == ((3, 0), (1, 4))


def test_runtime_on_large_case():
    case = load_case("ieee118")
    start = time.perf_counter()
    res = plan_branches(case, PlannerConfig(budget=40, rng_seed=0))
    assert time.perf_counter() - start < 20
    assert len(res.selected) == 40
