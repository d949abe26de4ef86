from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mtdgrid import (
    IdentificationError,
    StateInjection,
    ValidationError,
    identify_injection,
    is_stealthy,
    load_case,
    make_attack,
    measurement_matrix,
    security_factor,
    stealthy_basis,
    stealthy_family_3bus,
)
from mtdgrid.attack import closed_form_3bus_ratio
from mtdgrid.mtd import PerturbationPlan, apply_plan, random_plan

import oracles


def _models(case, plan):
    return measurement_matrix(case), measurement_matrix(apply_plan(case, plan))


def test_zero_injection(fig1):
    assert not make_attack(measurement_matrix(fig1), np.zeros(3)).any()


def test_injection_length_checked(fig1):
    with pytest.raises(ValidationError):
        make_attack(measurement_matrix(fig1), np.zeros(2))


def test_bus4_attack_touches_only_its_branches(fig1):
    model = measurement_matrix(fig1)
    c = StateInjection.on_states(3, {2: 1.0})  # bus 4
    a = make_attack(model, c)
    flows = a[fig1.n_bus : fig1.n_bus + fig1.l]
    # branches {1,4} and {3,4} carry |b| = 3 and 5
    assert_allclose(np.abs(flows), [0, 0, 3, 0, 5])
    plan = PerturbationPlan.from_deltas(fig1, {1: 0.1, 2: 0.1}, (0.5, 1.5))
    _, model_p = _models(fig1, plan)
    assert is_stealthy(0.1 * a, model_p)


def test_security_factor_no_mtd(fig1):
    model = measurement_matrix(fig1)
    rep = security_factor(model, model)
    assert (rep.gamma, rep.dim_stealthy) == (3, 3)


def test_security_factor_against_exact_oracle(fig1):
    plan = PerturbationPlan.from_deltas(fig1, {1: 0.1, 2: 0.1}, (0.5, 1.5))
    model, model_p = _models(fig1, plan)
    assert security_factor(model, model_p).gamma == 5
    old = [(b.from_bus, b.to_bus, b.susceptance) for b in fig1.branches]
    new = [(b.from_bus, b.to_bus, b.susceptance) for b in apply_plan(fig1, plan).branches]
    assert oracles.stealthy_dim(4, old, new) == 1


def test_table1_row2(fig1):
    plan = PerturbationPlan.from_deltas(fig1, {1: 0.1, 4: 0.1}, (0.5, 1.5))
    assert security_factor(*_models(fig1, plan)).dim_stealthy == 2


def test_fig3_single_and_complete(fig3):
    rep = security_factor(*_models(fig3, PerturbationPlan(((1, 1.1),))))
    assert (rep.gamma, rep.dim_stealthy) == (4, 2)
    plan = PerturbationPlan(((1, 1.1), (2, 1.075), (5, 1.02)))
    rep = security_factor(*_models(fig3, plan))
    assert (rep.gamma, rep.dim_stealthy, rep.complete) == (6, 0, True)


def test_security_factor_shape_and_rank_checks(fig1):
    H = measurement_matrix(fig1).H
    with pytest.raises(ValidationError):
        security_factor(H, H[:, :2])
    bad = H.copy()
    bad[:, 2] = bad[:, 1]
    with pytest.raises(ValidationError):
        security_factor(H, bad)


def test_space_report_bounds(ieee14):
    rng = np.random.default_rng(3)
    for _ in range(10):
        plan = random_plan(ieee14, int(rng.integers(1, 21)), rng=rng)
        rep = security_factor(*_models(ieee14, plan))
        assert rep.n <= rep.gamma <= min(rep.m, 2 * rep.n)
        assert max(0, 2 * rep.n - ieee14.l) <= rep.dim_stealthy <= rep.n


def test_attack_in_new_span_is_stealthy(fig3, rng):
    Hp = measurement_matrix(apply_plan(fig3, PerturbationPlan(((1, 1.1),)))).H
    assert is_stealthy(Hp @ rng.normal(size=3), Hp)
    with pytest.raises(ValidationError):
        is_stealthy(np.zeros(3), Hp)


def test_bus8_attack_always_stealthy(ieee14):
    model = measurement_matrix(ieee14)
    k78 = ieee14.find_branch(7, 8)
    rng = np.random.default_rng(11)
    col = model.H[:, model.state_index(8)]
    for _ in range(20):
        cands = [k for k in range(1, ieee14.l + 1) if k != k78]
        plan = random_plan(ieee14, int(rng.integers(1, 20)), rng=rng, candidates=cands)
        Hp = measurement_matrix(apply_plan(ieee14, plan)).H
        assert is_stealthy(0.1 * col, Hp)


def test_identify_round_trip(fig3):
    plan = PerturbationPlan(((1, 1.1), (2, 1.075), (5, 1.02)))
    H, Hp = (m.H for m in _models(fig3, plan))
    x = np.array([0.03, -0.01, 0.07])
    c = np.array([0.05, -0.02, 0.1])
    x_hat, c_hat = identify_injection(H, Hp, Hp @ x + H @ c)
    assert_allclose(c_hat, c, atol=1e-8)
    assert_allclose(x_hat, x, atol=1e-8)
    _, c0 = identify_injection(H, Hp, Hp @ x)
    assert_allclose(c0, 0, atol=1e-10)


def test_identify_requires_complete(fig1):
    plan = PerturbationPlan(((1, 1.1), (2, 0.9)))
    H, Hp = (m.H for m in _models(fig1, plan))
    with pytest.raises(IdentificationError, match="not unique"):
        identify_injection(H, Hp, H @ np.ones(3))


def test_stealthy_basis_spans_hidden_attacks(fig1):
    plan = PerturbationPlan(((1, 1.1), (4, 0.9)))
    H, Hp = (m.H for m in _models(fig1, plan))
    C = stealthy_basis(H, Hp)
    assert C.shape == (3, 2)
    for c in C.T:
        assert is_stealthy(H @ c, Hp)


def test_three_bus_closed_form_matches_exact():
    case = load_case("bus3_fig4b")
    exact = stealthy_family_3bus(case, 0.1, 0.1, exact=True)
    numeric = stealthy_family_3bus(case, 0.1, 0.1)
    closed = closed_form_3bus_ratio(-1.0, -2.0, 0.1, 0.1)
    assert exact == pytest.approx(closed, rel=1e-12)
    assert numeric == pytest.approx(exact, rel=1e-9)
    # the hidden direction really passes the post-change detector
    b = case.susceptances.copy()
    b[case.find_branch(1, 2) - 1] += 0.1
    b[case.find_branch(2, 3) - 1] += 0.1
    Hp = measurement_matrix(case.with_susceptances(b)).H
    a = measurement_matrix(case).H @ np.array([1.0, exact])
    assert is_stealthy(a, Hp)


def test_three_bus_no_perturbation():
    with pytest.raises(ValidationError, match="no perturbation"):
        stealthy_family_3bus(load_case("bus3_fig4b"), 0.0, 0.0)


def test_three_bus_rejects_other_topologies(fig1):
    with pytest.raises(ValidationError):
        stealthy_family_3bus(fig1, 0.1, 0.1)


def test_columns_in_new_span_stay_hidden(ieee14):
    """Attacks built only from H columns that H' can represent are never flagged."""
    rng = np.random.default_rng(5)
    model = measurement_matrix(ieee14)
    for _ in range(10):
        plan = random_plan(ieee14, int(rng.integers(1, 8)), rng=rng)
        Hp = measurement_matrix(apply_plan(ieee14, plan)).H
        cols = [j for j in range(model.n) if is_stealthy(model.H[:, j], Hp)]
        if not cols:
            continue
        c = np.zeros(model.n)
        c[cols] = rng.uniform(-0.1, 0.1, size=len(cols))
        assert is_stealthy(model.H @ c, Hp)
