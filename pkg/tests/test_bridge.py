import numpy as np
import pytest

from bcdebranges import bridge
from bcdebranges.grid import UniformGrid

half_sin = lambda x: 0.5 * np.sin(x)  # noqa: E731


@pytest.mark.parametrize("q, expected", [
    (None, lambda x: 0 * x),
    ("linear", lambda x: 1 + x**2),
    (half_sin, lambda x: np.cos(x) / 2 + np.sin(x) ** 2 / 4),
])
def test_potential_map(q, expected):
    grid = UniformGrid(1.0, 401)
    Q = bridge.schrodinger_potential(q, grid)
    assert np.max(np.abs(Q - expected(grid.nodes))) <= 1e-5


def test_potential_map_needs_vanishing_start():
    with pytest.raises(ValueError, match="q\\(0\\)"):
        bridge.schrodinger_potential(lambda x: 1 + x, UniformGrid(1.0, 11))


def test_potential_map_accepts_samples():
    grid = UniformGrid(1.0, 101)
    Q = bridge.schrodinger_potential(grid.nodes**2, grid)
    assert np.allclose(Q, 2 * grid.nodes + grid.nodes**4, atol=1e-12)


def test_response_relation_free_is_zero():
    assert bridge.response_relation_check(None, 1.0, 101)["max_error"] == 0.0


def test_response_relation_converges():
    e = [bridge.response_relation_check(half_sin, 1.0, M)["max_error"] for M in (101, 201)]
    assert e[0] <= 1e-4 and e[0] / e[1] >= 3.0


def test_measure_relation_literal_reading_misses_half():
    rep = bridge.measure_relation_check(half_sin, 2.0, 400)
    assert rep["below_first_node"] <= 1e-12
    # the one-sided integral over (0, sqrt(lam)) sees half of a symmetric measure
    assert not rep["passed"]
    assert rep["systematic_factor"] == pytest.approx(2.0, rel=5e-3)
    assert rep["symmetric_passed"] and rep["symmetric_max_rel_error"] <= 5e-3


def test_measure_relation_symmetric_reading_converges():
    e = [bridge.measure_relation_check(half_sin, 2.0, M)["symmetric_max_rel_error"] for M in (200, 400)]
    assert e[0] / e[1] >= 3.0


def test_isometry_free_is_exact():
    rep = bridge.embedding_isometry_check(lambda s: np.sin(3 * s), None, 1.0, 101)
    assert rep["rel_error"] <= 1e-14


def test_isometry_vanishing_control():
    rep = bridge.embedding_isometry_check(lambda s: 0 * s, half_sin, 1.0, 51)
    assert rep["lhs"] == 0.0 and rep["rhs"] == 0.0


def test_special_type_embedding():
    lam = np.array([0.0, 0.7, 2.0, -3.1])
    errs = [bridge.special_type_check(lambda s: s * (1 - s), half_sin, 1.0, M, lam)["max_error"] for M in (101, 201)]
    assert errs[0] <= 1e-4 and errs[0] / errs[1] >= 1.5


@pytest.mark.parametrize("q", [half_sin, None])
def test_bridge_report(q):
    rep = bridge.bridge_report(q)
    assert set(rep) == {"potential_map", "response_relation", "measure_relation", "isometry"}
    assert rep["potential_map"]["passed"] and rep["response_relation"]["passed"] and rep["isometry"]["passed"]
    assert not rep["measure_relation"]["passed"] and rep["measure_relation"]["symmetric_passed"]


def test_bridge_report_zero_potential_errors():
    rep = bridge.bridge_report(None)
    assert rep["response_relation"]["max_error"] == 0.0
    assert rep["isometry"]["max_error"] <= 1e-15
    # the two measure discretizations differ at O(h^2) even without a potential
    assert 0 < rep["measure_relation"]["symmetric_max_rel_error"] <= 5e-3
