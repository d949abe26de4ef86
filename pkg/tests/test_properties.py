from __future__ import annotations

from functools import lru_cache

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from mtdgrid import GammaTracker, PerturbationPlan, dump_case, load_case, measurement_matrix, parse_case
from mtdgrid.grid import Branch, GridCase, bus_degrees, covered_buses, single_branch_buses
from mtdgrid.linalg import in_span, numerical_rank
from mtdgrid.mtd import apply_plan, delta_H_for_plan

FIXTURES = ["bus4_fig1", "bus4_fig3", "bus4_fig4a", "bus3_fig4b", "ieee14", "ieee30", "ieee57", "ieee118", "ieee145"]
ratio = st.floats(0.8, 1.2).filter(lambda x: abs(x - 1) >= 1e-3)


@lru_cache(maxsize=None)
def case(name):
    return load_case(name)


@lru_cache(maxsize=None)
def tracker(name):
    return GammaTracker(case(name))


@st.composite
def plans(draw, names=FIXTURES, min_size=1):
    name = draw(st.sampled_from(names))
    c = case(name)
    branches = draw(st.lists(st.integers(1, c.l), min_size=min_size, max_size=min(c.l, 25), unique=True))
    lams = draw(st.lists(ratio, min_size=len(branches), max_size=len(branches), unique=True))
    return name, PerturbationPlan(tuple(zip(branches, lams)))


@settings(max_examples=500, deadline=None)
@given(plans(), st.data())
def test_single_branch_extension_moves_gamma_by_at_most_one(named, data):
    name, plan = named
    c = case(name)
    free = [k for k in range(1, c.l + 1) if k not in plan.ratios]
    if not free:
        return
    k = data.draw(st.sampled_from(free))
    lam = data.draw(ratio)
    assert tracker(name).delta_gamma(plan, k, lam) in (-1, 0, 1)


@settings(max_examples=500, deadline=None)
@given(plans(names=["bus4_fig1", "bus4_fig3", "ieee14", "ieee30", "ieee57"]))
def test_delta_H_only_touches_endpoint_columns(named):
    name, plan = named
    rep = delta_H_for_plan(case(name), plan)
    assert rep.sparsity_verified
    assert rep.nonzero_buses <= covered_buses(case(name), plan.branches)


@settings(max_examples=200, deadline=None)
@given(plans(names=["ieee14", "ieee30", "bus4_fig4a"]), st.data())
def test_uncovered_bus_attacks_stay_hidden(named, data):
    name, plan = named
    c = case(name)
    model = measurement_matrix(c)
    uncovered = [b for b in model.state_buses if b not in covered_buses(c, plan.branches)]
    if not uncovered:
        return
    bus = data.draw(st.sampled_from(uncovered))
    bias = data.draw(st.floats(-0.1, 0.1).filter(lambda x: x != 0))
    Hp = measurement_matrix(apply_plan(c, plan)).H
    assert in_span(bias * model.H[:, model.state_index(bus)], Hp)


@settings(max_examples=100, deadline=None)
@given(plans(names=["ieee14", "ieee145"]))
def test_degree_one_columns_stay_parallel(named):
    name, plan = named
    c = case(name)
    model = measurement_matrix(c)
    Hp = measurement_matrix(apply_plan(c, plan)).H
    for bus in single_branch_buses(c):
        j = model.state_index(bus)
        if j is None:
            continue
        assert numerical_rank(np.column_stack([model.H[:, j], Hp[:, j]])) == 1


@st.composite
def random_cases(draw):
    n_bus = draw(st.integers(2, 8))
    # spanning tree first, then extra edges, so the grid is connected
    edges = [(draw(st.integers(1, i - 1)), i) for i in range(2, n_bus + 1)]
    pairs = [(i, j) for i in range(1, n_bus + 1) for j in range(i + 1, n_bus + 1)]
    extra = draw(st.lists(st.sampled_from(pairs), max_size=6))
    edges += extra
    b = draw(st.lists(st.floats(-30, -0.1), min_size=len(edges), max_size=len(edges)))
    loads = draw(st.lists(st.floats(0, 100), min_size=n_bus, max_size=n_bus))
    branches = tuple(Branch(k, i, j, bk) for k, ((i, j), bk) in enumerate(zip(edges, b), start=1))
    return GridCase(branches=branches, loads=tuple(loads))


@settings(max_examples=200, deadline=None)
@given(random_cases())
def test_measurement_matrix_shape_and_rank(c):
    model = measurement_matrix(c)
    assert model.m == 2 * c.l + c.n + 1
    assert numerical_rank(model.H) == c.n
    assert covered_buses(c, range(1, c.l + 1)) == set(c.buses)
    assert sum(bus_degrees(c).values()) == 2 * c.l


@settings(max_examples=200, deadline=None)
@given(random_cases())
def test_parse_dump_identity(c):
    assert parse_case(dump_case(c)) == c
