import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcdebranges import discrete
from bcdebranges.debranges import hb_check
from bcdebranges.measures import jacobi_truncated_measure

potentials = st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=9)


@pytest.mark.parametrize("k, lam, expected", [(0, 0.7, 0.0), (1, 0.7, 1.0), (2, 0.7, 0.7),
                                              (3, 0.7, 0.7**2 - 1), (4, 2.0, 4.0)])
def test_chebyshev_values(k, lam, expected):
    assert discrete.chebyshev_T(k, lam) == pytest.approx(expected, abs=1e-15)


def test_chebyshev_at_two_counts():
    assert np.array_equal(discrete.chebyshev_table(4, 2.0), [0, 1, 2, 3, 4])


def test_free_delta_moves_one_site_per_step():
    u = discrete.forward([], [1.0], 6).u
    n, t = np.indices(u.shape)
    assert np.array_equal(u, (n == t).astype(float))


@settings(max_examples=25, deadline=None)
@given(potentials, st.integers(0, 2**31 - 1))
def test_finite_speed(b, seed):
    f = np.random.default_rng(seed).standard_normal(8)
    u = discrete.forward(b, f, 8).u
    n, t = np.indices(u.shape)
    assert np.all(u[t < n] == 0)


def test_zero_control_zero_field():
    assert not np.any(discrete.forward([0.3, 0.2], np.zeros(5), 5).u)


def test_free_response():
    r = discrete.response(np.zeros(10), 10)
    assert np.array_equal(r, np.eye(1, 19)[0])


@pytest.mark.parametrize("b", [[0.4, -0.9, 0.2], [-0.7, 0.5]])
def test_response_first_entries(b):
    r = discrete.response(b, 3)
    assert r[0] == 1.0 and r[1] == pytest.approx(b[0]) and r[2] == pytest.approx(b[0] ** 2)


@settings(max_examples=25, deadline=None)
@given(potentials, st.integers(0, 2**31 - 1))
def test_response_is_a_convolution(b, seed):
    T = 6
    f = np.random.default_rng(seed).standard_normal(T)
    r = discrete.response(b, T)
    got = discrete.response_operator(b, f, T)
    # (R f)_t = sum_s r_{t-1-s} f_s
    expected = np.array([sum(r[t - 1 - s] * f[s] for s in range(t)) for t in range(1, T + 1)])
    assert np.allclose(got, expected, atol=1e-12 * (1 + np.max(np.abs(expected))))


def test_connecting_T2_layout():
    r = [1.0, 0.3, 0.7]
    assert np.array_equal(discrete.connecting_from_response(r, 2), [[1.7, 0.3], [0.3, 1.0]])


def test_connecting_one_site_potential_is_gram():
    b1 = 0.6
    C = discrete.connecting_from_response(discrete.response([b1], 2), 2)
    assert np.allclose(C, [[1 + b1**2, b1], [b1, 1]], atol=1e-15)
    assert np.allclose(C, discrete.gram_matrix([b1], 2), atol=1e-15)


def test_connecting_rejects_corrupted_response():
    with pytest.raises(ValueError, match="r_0 = 1"):
        discrete.connecting_from_response([0.9, 0.0, 0.0], 2)


def test_connecting_rejects_short_response():
    with pytest.raises(ValueError, match="too short"):
        discrete.connecting_from_response([1.0, 0.0], 2)


@pytest.mark.parametrize("N, T, expected", [(2, 1, [[1.0]]), (3, 2, np.eye(2))])
def test_connecting_from_free_measure(N, T, expected):
    C = discrete.connecting_from_measure(jacobi_truncated_measure(np.zeros(N), N), T)
    assert np.allclose(C, expected, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=8, max_size=8))
def test_dual_route(b):
    C1 = discrete.connecting_from_response(discrete.response(b, 5), 5)
    C2 = discrete.connecting_from_measure(jacobi_truncated_measure(b, 12), 5)
    assert np.max(np.abs(C1 - C2)) <= 1e-10


@pytest.mark.parametrize("T", [1, 4, 9])
def test_gram_identity(T):
    b = np.random.default_rng(T).uniform(-1, 1, T)
    C = discrete.connecting_from_response(discrete.response(b, T), T)
    assert np.max(np.abs(C - discrete.gram_matrix(b, T))) <= 1e-12


def test_krein_free_T2():
    z = 0.4 - 1.3j
    sol = discrete.krein_solve(np.eye(2), z)
    assert np.allclose(sol.j, [np.conj(z), 1.0])
    assert discrete.kernel_krein(sol, 2.5) == pytest.approx(1 + np.conj(z) * 2.5)


def test_krein_T1_is_one():
    assert discrete.krein_solve([[1.0]], 3 + 2j).j.tolist() == [1.0 + 0j]


def test_krein_real_point_gives_real_solution():
    b = [0.3, -0.5, 0.1, 0.8]
    C = discrete.connecting_from_response(discrete.response(b, 4), 4)
    assert np.all(discrete.krein_solve(C, 0.37).j.imag == 0)


def test_free_kernel_is_chebyshev_sum():
    T = 5
    z, lam = 0.2 + 0.9j, -1.1 + 0.3j
    sol = discrete.krein_solve(np.eye(T), z)
    expected = np.sum(np.conj(discrete.chebyshev_table(T, z)[1:]) * discrete.chebyshev_table(T, lam)[1:])
    assert discrete.kernel_krein(sol, lam) == pytest.approx(expected, abs=1e-13)


def test_reproducing_property():
    T = 6
    rng = np.random.default_rng(7)
    b = rng.uniform(-1, 1, T)
    C = discrete.connecting_from_response(discrete.response(b, T), T)
    m = jacobi_truncated_measure(b, T + 4)
    zs = [1 + 1j, -1 + 1j, 2j, 0.5, -0.3 - 0.7j]
    for sol in discrete.krein_solve_many(C, zs):
        for _ in range(5):
            f = rng.standard_normal(T)
            F = complex(discrete.transform(f, sol.z))
            via_form = np.conj(C @ sol.j) @ f
            via_measure = np.sum(m.weights * np.conj(discrete.kernel_krein(sol, m.nodes)) * discrete.transform(f, m.nodes))
            assert abs(via_form - F) <= 1e-9 * (1 + abs(F))
            assert abs(via_measure - F) <= 1e-9 * (1 + abs(F))


def test_special_control_gives_conjugate_point_solution():
    # W j^z equals (phi_1, ..., phi_T) evaluated at conj(z)
    T = 5
    b = np.random.default_rng(8).uniform(-1, 1, T)
    C = discrete.connecting_from_response(discrete.response(b, T), T)
    z = 0.6 + 0.8j
    state = discrete.state_at(b, discrete.krein_solve(C, z).j, T)
    phi = discrete.phi_table(b, T, np.conj(z))[1:]
    assert np.max(np.abs(state - phi)) <= 1e-9


def test_kernel_routes_agree():
    T = 6
    rng = np.random.default_rng(9)
    b = rng.uniform(-1, 1, T)
    K = discrete.kernel_from_connecting(discrete.connecting_from_response(discrete.response(b, T), T))
    z = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    xi = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    Kd = discrete.kernel_direct(b, T, z, xi)
    assert np.max(np.abs(K(z, xi) - Kd) / np.abs(Kd)) <= 1e-9


def test_kernel_diagonal_positive():
    b = np.random.default_rng(10).uniform(-1, 1, 5)
    K = discrete.kernel_from_connecting(discrete.connecting_from_response(discrete.response(b, 5), 5))
    z = np.array([1j, -3 + 0.2j, 2 - 4j])
    d = K(z, z)
    assert np.all(d.real > 0) and np.allclose(d.imag, 0, atol=1e-10 * np.abs(d))


def test_kernel_direct_single_site():
    assert discrete.kernel_direct([], 1, 2j, 2j) == pytest.approx(1.0)


@pytest.mark.parametrize("b1", [0.0, 0.45])
def test_E_direct_one_site(b1):
    E = discrete.E_direct([b1], 1)
    z = np.array([0.3 + 0.2j, -2.0])
    assert np.allclose(E.value(z), 1 - 1j * (z - b1))


def test_E_direct_is_hermite_biehler():
    b = np.random.default_rng(11).uniform(-1, 1, 6)
    assert hb_check(discrete.E_direct(b, 6)).passed


def test_recover_identity():
    assert np.array_equal(discrete.recover_potential(np.eye(4)), np.zeros(3))


def test_recover_hand_example():
    r = [1.0, 0.5, 0.25]
    C = discrete.connecting_from_response(r, 2)
    assert np.allclose(C, [[1.25, 0.5], [0.5, 1.0]])
    assert discrete.recover_potential(C) == pytest.approx([0.5])


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=9, max_size=9))
def test_roundtrip(b):
    C = discrete.connecting_from_response(discrete.response(b, 10), 10)
    assert np.max(np.abs(discrete.recover_potential(C, 10) - b)) <= 1e-8


def test_recover_rejects_indefinite():
    with pytest.raises(ValueError):
        discrete.recover_potential(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_recover_rejects_inconsistent_data():
    with pytest.raises(ValueError, match="Cholesky diagonal"):
        discrete.recover_potential(np.array([[2.0, 0.0], [0.0, 1.0]]))
