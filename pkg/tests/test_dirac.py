import numpy as np
import pytest

from bcdebranges import dirac
from bcdebranges.debranges import hb_check
from bcdebranges.grid import UniformGrid

T = 1.0
V_Q = (None, lambda x: 0.3 * np.sin(x))
V_PQ = (lambda x: 0.2 * np.cos(x), lambda x: 0.3 * np.sin(x))


def _connecting(V, M):
    grid = UniformGrid(T, M)
    return dirac.connecting_build_dirac(dirac.response_kernel_dirac(V, T, M), T, grid), grid


def test_free_transport_exact():
    h = 1 / 100
    f = lambda t: np.cos(2 * t) + 1j * t  # noqa: E731
    sol = dirac.dirac_forward(None, f, 1.5, h)
    X, Tt = np.meshgrid(np.arange(sol.u1.shape[1]) * h, np.arange(sol.u1.shape[0]) * h)
    exact = np.where(Tt >= X, f(Tt - X), 0.0)
    assert np.max(np.abs(sol.u1 - exact)) <= 1e-14
    assert np.max(np.abs(sol.u2 - 1j * exact)) <= 1e-14


def test_free_adjoint_transport():
    h = 1 / 50
    g = lambda t: 1 + t + 0.5j * t**2  # noqa: E731
    sol = dirac.dirac_adjoint_forward(None, g, 1.0, h)
    X, Tt = np.meshgrid(np.arange(sol.u1.shape[1]) * h, np.arange(sol.u1.shape[0]) * h)
    exact = np.where(Tt >= X, g(Tt - X), 0.0)
    assert np.max(np.abs(sol.u1 - exact)) <= 1e-14
    assert np.max(np.abs(sol.u2 + 1j * exact)) <= 1e-14


def test_zero_control_zero_field():
    sol = dirac.dirac_forward(V_PQ, np.zeros(21), 0.2, 0.01)
    assert not np.any(sol.u1) and not np.any(sol.u2)


def test_free_extended_states():
    grid = UniformGrid(T, 51)
    x = grid.nodes
    f = np.cos(x) + x
    s1 = dirac.extended_state(None, f, np.zeros_like(f), T, grid.h)
    assert np.allclose(s1, [f[::-1], 1j * f[::-1]], atol=1e-14)
    s2 = dirac.extended_state(None, f, f, T, grid.h)
    assert np.allclose(s2, [2 * f[::-1], np.zeros_like(f)], atol=1e-14)
    assert not np.any(dirac.extended_state(None, 0 * f, 0 * f, T, grid.h))


def test_free_response_and_connecting():
    C, _ = _connecting(None, 101)
    assert np.all(dirac.response_kernel_dirac(None, T, 101).r == 0)
    assert np.array_equal(C.matrix, 2 * np.eye(202))


def test_boundary_value_starts_at_i():
    # with f = 1 the second component at x = 0 starts at i for a real potential
    sol = dirac.dirac_forward(V_Q, np.ones(11), 0.01, 0.001)
    assert sol.u2[1, 0] == pytest.approx(1j, abs=1e-3)


@pytest.mark.parametrize("V", [V_Q, V_PQ])
def test_connecting_hermitian(V):
    C, _ = _connecting(V, 61)
    assert np.array_equal(C.form, C.form.conj().T)


def _gram_error(V, M):
    C, grid = _connecting(V, M)
    s = grid.nodes
    ctl = np.array([np.concatenate(p).astype(complex) for p in
                    [(np.cos(s), 0 * s), (0 * s, s**2 + 1j * s), (1j * np.exp(s), np.sin(3 * s))]])
    S = dirac.extended_states(V, T, grid, ctl)
    gram = np.conj(S) @ (C.weights[:, None] * S.T)
    form = np.conj(ctl) @ C.form @ ctl.T
    return np.max(np.abs(gram - form)) / np.max(np.abs(gram))


@pytest.mark.parametrize("V", [V_Q, V_PQ])
def test_gram_identity_converges(V):
    e1, e2 = _gram_error(V, 101), _gram_error(V, 201)
    assert e1 <= 1e-3
    assert e1 / e2 >= 1.5


def test_free_kernel_at_origin():
    C, grid = _connecting(None, 51)
    j1, j2 = dirac.krein_solve_dirac(C, 0.0)
    assert dirac.kernel_krein_dirac((j1, j2), 0.0, grid) == pytest.approx(T, abs=1e-14)


def test_special_control_gives_conjugate_point_solution():
    C, grid = _connecting(V_Q, 201)
    z = 1.2 + 0.7j
    j1, j2 = dirac.krein_solve_dirac(C, z)
    state = dirac.extended_state(V_Q, j1, j2, T, grid.h)
    theta = dirac.theta_profile(V_Q, np.conj(z), grid)
    assert np.max(np.abs(state - theta)) <= 1e-3 * np.max(np.abs(theta))


def _kernel_error(V, M):
    C, _ = _connecting(V, M)
    K = dirac.kernel_krein_evaluator(C)
    z = np.array([0.5 + 1j, -2 + 0.3j, 3j, 1.0])
    xi = np.array([1j, 1.0, -1 + 2j, 2 - 1j])
    Kd = dirac.kernel_direct_dirac(V, T, z, xi, steps=800)
    return np.max(np.abs(K(z, xi) - Kd) / np.abs(Kd))


def test_krein_kernel_matches_direct():
    e1, e2 = _kernel_error(V_Q, 101), _kernel_error(V_Q, 201)
    assert e1 <= 1e-3 and e1 / e2 >= 1.5


def test_reproducing_property():
    C, grid = _connecting(V_Q, 201)
    rng = np.random.default_rng(0)
    s = grid.nodes
    for z in [0.5 + 1j, 2j, -1.0]:
        j1, j2 = dirac.krein_solve_dirac(C, z)
        j = np.concatenate([j1, j2])
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        f1 = c[0] * np.cos(2 * s) + c[1] * s
        f2 = c[2] * np.exp(-s) + c[3] * s**2
        F = dirac.transform_dirac(f1, f2, z, grid)
        got = C.inner(j, np.concatenate([f1, f2]))
        assert abs(got - F) <= 1e-3 * (1 + abs(F))


@pytest.mark.parametrize("V", [V_Q, V_PQ])
def test_fourier_of_state_matches_control_formula(V):
    errs = []
    for M in (101, 201):
        grid = UniformGrid(T, M)
        s = grid.nodes
        f1, f2 = np.cos(s) + 0.5j * s, np.sin(2 * s)
        state = dirac.extended_state(V, f1, f2, T, grid.h)
        lam = np.array([0.0, 1.3, -2.5])
        errs.append(np.max(np.abs(dirac.fourier_of_state(V, state, lam, grid) - dirac.transform_dirac(f1, f2, lam, grid))))
    assert errs[0] <= 1e-3 and errs[0] / errs[1] >= 3.0


@pytest.mark.parametrize("z", [0.7, 2 + 1j, -3 - 0.5j])
def test_free_theta_closed_form(z):
    th = dirac.theta_ode(None, 1.3, z)
    assert th.theta1 == pytest.approx(-np.sin(z * 1.3), rel=1e-9, abs=1e-12)
    assert th.theta2 == pytest.approx(np.cos(z * 1.3), rel=1e-9, abs=1e-12)


def test_free_theta_at_zero():
    th = dirac.theta_profile(None, 0.0, UniformGrid(2.0, 11))
    assert np.allclose(th[0], 0) and np.allclose(th[1], 1)


def test_free_E():
    z = np.array([0.3 + 2j, -2.5 + 0.1j, 1.0])
    E = dirac.E_direct_dirac(None, 1.7)
    assert np.allclose(E.value(z), -1j * np.exp(-1j * z * 1.7), atol=1e-8)


def test_free_direct_kernel_at_origin():
    assert dirac.kernel_direct_dirac(None, 1.4, 0.0, 0.0) == pytest.approx(1.4, rel=1e-12)


@pytest.mark.parametrize("V", [None, V_Q])
def test_E_is_hermite_biehler(V):
    E = dirac.E_direct_dirac(V, 1.0)
    rep = hb_check(E, kernel=dirac.kernel_direct_evaluator(V, 1.0))
    assert rep.passed and hb_check(E).passed
