from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from mtdgrid import CaseParseError, ValidationError, dump_case, load_case, measurement_matrix, parse_case
from mtdgrid.errors import ObservabilityError
from mtdgrid.grid import (
    admittance_matrix,
    covered_buses,
    incidence_matrix,
    single_branch_buses,
)

from oracles import exact_H

TWO_BUS = """NAME two
BUS
1 0
2 50
BRANCH
1 2 b -1
GEN
1 100 20
"""


def test_two_bus_parses():
    case = parse_case(TWO_BUS)
    assert (case.l, case.n) == (1, 1)
    assert case.loads == (0.0, 50.0)
    assert case.generators[0].cost == 20.0


def test_fig1_case(fig1):
    assert (fig1.l, fig1.n) == (5, 3)
    assert_array_equal(fig1.susceptances, [-1, -2, -3, -4, -5])


def test_ieee14_size(ieee14):
    assert (ieee14.l, ieee14.n) == (20, 13)


def test_reactance_converts_to_susceptance():
    case = parse_case("BUS\n1 0\n2 0\nBRANCH\n1 2 x 0.25\n")
    assert case.susceptances[0] == pytest.approx(-4.0)


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("BUS\n1 0\n2 0\nBRANCH\n1 2 b\n", 5),
        ("BUS\n1 zero\n2 0\nBRANCH\n1 2 b -1\n", 2),
        ("BUS\n1 0\n2 0\nBRANCH\n1 2 q -1\n", 5),
    ],
)
def test_malformed_rows_report_line(text, lineno):
    with pytest.raises(CaseParseError) as info:
        parse_case(text)
    assert info.value.lineno == lineno
    assert f"line {lineno}" in str(info.value)


def test_zero_reactance_rejected():
    with pytest.raises(ValidationError):
        parse_case("BUS\n1 0\n2 0\nBRANCH\n1 2 x 0\n")


def test_disconnected_rejected():
    with pytest.raises(ValidationError):
        parse_case("BUS\n1 0\n2 0\n3 0\n4 0\nBRANCH\n1 2 b -1\n3 4 b -1\n")


@pytest.mark.parametrize("name", ["ieee14", "ieee30", "bus4_fig3", "bus3_fig4b"])
def test_dump_parse_round_trip(name):
    case = load_case(name)
    again = parse_case(dump_case(case))
    assert again == case


def test_incidence_rows():
    case = parse_case(TWO_BUS)
    assert_array_equal(incidence_matrix(case), [[1, -1]])


def test_incidence_fig1(fig1):
    A = incidence_matrix(fig1)
    assert_array_equal(A[4], [0, 0, 1, -1])
    assert_array_equal(A.sum(axis=1), 0)
    assert np.all((A == 1).sum(axis=1) == 1)


def test_two_bus_H():
    model = measurement_matrix(parse_case(TWO_BUS))
    # rows: injection 1, injection 2, flow +, flow -
    assert_array_equal(model.H, [[-1], [1], [-1], [1]])


@pytest.mark.parametrize("name, shape", [("bus4_fig1", (14, 3)), ("ieee14", (54, 13)), ("ieee30", (2 * 41 + 30, 29))])
def test_H_shape(name, shape):
    model = measurement_matrix(load_case(name))
    assert model.H.shape == shape
    assert np.linalg.matrix_rank(model.H) == shape[1]


@pytest.mark.parametrize("name", ["bus4_fig1", "bus4_fig3", "bus4_fig4a", "bus3_fig4b"])
@pytest.mark.parametrize("slack", [1, 2])
def test_H_matches_exact_builder(name, slack):
    case = load_case(name)
    ref = exact_H(case.n_bus, [(br.from_bus, br.to_bus, br.susceptance) for br in case.branches], slack)
    assert_allclose(measurement_matrix(case, slack).H, np.array(ref, dtype=float))


def test_admittance_symmetric_and_reduced_nonsingular(ieee14):
    B = admittance_matrix(ieee14)
    assert_allclose(B, B.T)
    assert np.linalg.matrix_rank(B[1:, 1:]) == ieee14.n


def test_mask_flows_only(fig1):
    rows = list(range(fig1.n_bus, fig1.n_bus + 2 * fig1.l))
    model = measurement_matrix(fig1, mask=rows)
    assert model.m == 2 * fig1.l
    assert np.linalg.matrix_rank(model.H) == fig1.n


def test_mask_losing_observability(fig1):
    with pytest.raises(ObservabilityError):
        measurement_matrix(fig1, mask=[5])


def test_bad_slack(fig1):
    with pytest.raises(ValidationError):
        measurement_matrix(fig1, slack=9)


def test_single_branch_buses():
    assert single_branch_buses(load_case("ieee14")) == {8}
    assert single_branch_buses(load_case("bus4_fig1")) == set()
    assert single_branch_buses(load_case("bus4_fig4a")) == {3}
    # MATPOWER case145 has five degree-one buses
    assert single_branch_buses(load_case("ieee145")) == {35, 99, 113, 114, 126}


def test_covered_buses(ieee14, fig1):
    assert len(covered_buses(ieee14, [1, 3, 4, 7, 8, 11, 12, 16, 17, 20])) == 13
    assert covered_buses(ieee14, []) == set()
    assert covered_buses(fig1, [1]) == {1, 2}
    assert covered_buses(ieee14, range(1, 21)) == set(range(1, 15))
