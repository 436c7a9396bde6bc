import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcdebranges import discrete
from bcdebranges.debranges import (
    E_from_kernel,
    EntireEvaluator,
    KernelEvaluator,
    axioms_check_discrete,
    cauchy_derivative,
    hb_check,
    kernel_evaluator_from_E,
    kernel_from_E,
    standard_grid,
)
from bcdebranges.measures import jacobi_truncated_measure

E_linear = EntireEvaluator(lambda z: (1 - 1j * z, -1j * np.ones_like(z)), "1 - iz")
E_anti = EntireEvaluator(lambda z: (1 + 1j * z, 1j * np.ones_like(z)), "1 + iz")
E_exp = EntireEvaluator(lambda z: (np.exp(-1j * z), -1j * np.exp(-1j * z)), "exp(-iz)")
E_free2 = EntireEvaluator(lambda z: (z - 1j * (z**2 - 1), 1 - 2j * z), "free T=2")

cplx = st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(cplx, cplx)
def test_linear_E_gives_unit_kernel(z, xi):
    assert complex(kernel_from_E(E_linear, z, xi)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(cplx, cplx)
def test_exponential_E_gives_sinc_kernel(z, xi):
    d = np.conj(z) - xi
    expected = 1.0 if abs(d) < 1e-12 else np.sin(d) / d
    got = complex(kernel_from_E(E_exp, z, xi))
    assert got == pytest.approx(expected, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(cplx, cplx)
def test_free_T2_kernel(z, xi):
    got = complex(kernel_from_E(E_free2, z, xi))
    assert got == pytest.approx(1 + np.conj(z) * xi, rel=1e-10, abs=1e-10)


def test_removable_singularity_uses_limit():
    z = 0.3 + 0.8j
    on = complex(kernel_from_E(E_exp, z, np.conj(z)))
    off = complex(kernel_from_E(E_exp, z, np.conj(z) + 1e-6))
    assert on == pytest.approx(1.0, abs=1e-14)
    assert on == pytest.approx(off, abs=1e-6)


def test_kernel_hermitian_symmetry():
    rng = np.random.default_rng(1)
    b = rng.uniform(-1, 1, 5)
    E = discrete.E_direct(b, 5)
    z = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    xi = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    K1 = kernel_from_E(E, z, xi)
    K2 = kernel_from_E(E, xi, z)
    assert np.max(np.abs(K1 - np.conj(K2)) / np.abs(K1)) <= 1e-12


def test_non_finite_E_rejected():
    bad = EntireEvaluator(lambda z: (np.full_like(z, np.nan), np.zeros_like(z)), "nan")
    with pytest.raises(ValueError, match="non-finite"):
        kernel_from_E(bad, 1j, 2j)


def test_hb_linear_example():
    grid = np.array([1j, 1 + 1j, -2 + 0.5j])
    rep = hb_check(E_linear, grid)
    assert rep.passed and rep.checks_agree
    # |E(i)|^2 - |E(-i)|^2 = 4 at the first point; 4y is minimal at y = 0.5
    assert rep.min_hb_gap == pytest.approx(2.0)


def test_hb_dirac_free_passes():
    N = 1.3
    E = EntireEvaluator(lambda z: (-1j * np.exp(-1j * z * N), -N * np.exp(-1j * z * N)), "dirac free")
    assert hb_check(E).passed


def test_hb_anti_example_fails_in_both_tests():
    rep = hb_check(E_anti, np.array([1j, 1 + 1j, -2 + 0.5j]))
    assert not rep.passed
    assert rep.min_hb_gap < 0 and rep.min_diagonal < 0 and rep.checks_agree


@pytest.mark.parametrize("grid", [np.array([]), np.array([1.0 + 0j]), np.array([1 - 1j])])
def test_hb_grid_validation(grid):
    with pytest.raises(ValueError):
        hb_check(E_linear, grid)


def test_standard_grid_shape():
    g = standard_grid()
    assert g.size == 100 and np.all(g.imag > 0) and g.imag.max() == 5.0 and np.abs(g.real).max() == 5.0


def test_cauchy_derivative():
    z = np.array([0.3 + 0.2j, -1.0])
    assert np.allclose(cauchy_derivative(np.exp, z), np.exp(z), atol=1e-12)


def test_E_from_kernel_unit_kernel():
    K = KernelEvaluator(lambda z, xi: np.ones(np.broadcast(z, xi).shape, dtype=complex), "one")
    E, c = E_from_kernel(K)
    z = np.array([0.5 + 1j, -2 + 0.1j, 3j])
    assert np.allclose(kernel_from_E(E, z, z[::-1]), 1.0, atol=1e-10)
    # E is proportional to 1 - iz
    ratio = E.value(z) / (1 - 1j * z)
    assert np.allclose(ratio, ratio[0], atol=1e-10)
    assert c == pytest.approx(1 / np.pi, rel=1e-12)


def test_E_from_kernel_free_T2_calibration():
    K = discrete.kernel_from_connecting(np.eye(2))
    E, c = E_from_kernel(K)
    assert c == pytest.approx(1 / np.pi, rel=1e-12)
    rng = np.random.default_rng(2)
    z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    xi = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    assert np.allclose(kernel_from_E(E, z, xi), 1 + np.conj(z) * xi, rtol=1e-8)


def test_E_from_kernel_roundtrip_on_generated_E():
    b = np.random.default_rng(4).uniform(-1, 1, 4)
    K = kernel_evaluator_from_E(discrete.E_direct(b, 4))
    E, _ = E_from_kernel(K)
    rng = np.random.default_rng(5)
    z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    xi = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    ref = K(z, xi)
    assert np.max(np.abs(kernel_from_E(E, z, xi) - ref) / np.abs(ref)) <= 1e-8


def test_E_from_degenerate_kernel_fails():
    K = KernelEvaluator(lambda z, xi: np.zeros(np.broadcast(z, xi).shape, dtype=complex), "zero")
    with pytest.raises(ValueError):
        E_from_kernel(K)


def test_axioms_discrete_free_T3():
    m = jacobi_truncated_measure(np.zeros(5), 5)
    rep = axioms_check_discrete(3, m, rng=0)
    assert rep.passed and rep.blaschke_checked > 0
    assert rep.max_bound_ratio <= 1 + 1e-10


def test_axioms_constant_function():
    m = jacobi_truncated_measure(np.zeros(5), 5)
    rep = axioms_check_discrete(3, m, samples=[[1, 0, 0]])
    assert rep.conjugation_max_rel_err == 0.0


def test_axioms_blaschke_example():
    # F(lam) = lam - (1 + i) = T_2 - (1 + i) T_1
    m = jacobi_truncated_measure(np.zeros(4), 4)
    rep = axioms_check_discrete(3, m, samples=[[-(1 + 1j), 1, 0]])
    assert rep.blaschke_checked == 1 and rep.blaschke_max_rel_err <= 1e-10


def test_axioms_need_truncation_beyond_T():
    with pytest.raises(ValueError):
        axioms_check_discrete(3, jacobi_truncated_measure(np.zeros(3), 3))
