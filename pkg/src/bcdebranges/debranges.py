"""System-agnostic de Branges space machinery.

Kernels from Hermite-Biehler functions, the Hermite-Biehler test on a grid
of the upper half-plane, reconstruction of ``E`` from a reproducing kernel
and axiom diagnostics for the discrete polynomial spaces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

SINGULAR_TOL = 1e-8


@dataclass(frozen=True)
class EntireEvaluator:
    """Handle on an entire function: ``E(z) -> (value, derivative)``."""

    func: Callable
    label: str = ""

    def __call__(self, z):
        v, d = self.func(np.asarray(z, dtype=complex))
        return np.asarray(v, dtype=complex), np.asarray(d, dtype=complex)

    def value(self, z):
        return self(z)[0]

    def derivative(self, z):
        return self(z)[1]


@dataclass(frozen=True)
class KernelEvaluator:
    """Two-point kernel ``(z, xi) -> J_z(xi)``, vectorized by broadcasting.

    ``dxi`` optionally gives the derivative in ``xi``; when absent it is
    obtained by contour-integral differentiation.
    """

    func: Callable
    provenance: str
    dxi: Callable | None = None

    def __call__(self, z, xi):
        return np.asarray(self.func(np.asarray(z, dtype=complex), np.asarray(xi, dtype=complex)), dtype=complex)


@dataclass(frozen=True)
class HBReport:
    points: np.ndarray
    min_hb_gap: float
    min_diagonal: float
    passed: bool
    checks_agree: bool = True

    def to_dict(self) -> dict:
        return {
            "n_points": int(self.points.size),
            "min_hb_gap": float(self.min_hb_gap),
            "min_diagonal": float(self.min_diagonal),
            "passed": bool(self.passed),
            "checks_agree": bool(self.checks_agree),
        }


def standard_grid(n: int = 10, x_max: float = 5.0, y_min: float = 0.1, y_max: float = 5.0) -> np.ndarray:
    """``n x n`` grid over ``[-x_max, x_max] x (y_min, y_max]`` in the upper half-plane."""
    x = np.linspace(-x_max, x_max, n)
    y = np.linspace(y_min, y_max, n + 1)[1:]
    X, Y = np.meshgrid(x, y, indexing="ij")
    return (X + 1j * Y).ravel()


def cauchy_derivative(f: Callable, z, radius: float = 0.1, n: int = 16):
    """Derivative of a holomorphic ``f`` by the trapezoid rule on a circle."""
    z = np.asarray(z, dtype=complex)
    theta = 2 * np.pi * np.arange(n) / n
    ring = radius * np.exp(1j * theta)
    vals = f(z[..., None] + ring)
    return np.mean(vals / ring, axis=-1)


def kernel_from_E(E: EntireEvaluator, z, xi):
    """Reproducing kernel of ``B(E)``.

    ``J_z(xi) = [conj(E(z)) E(xi) - E(conj z) conj(E(conj xi))] / (2i (conj z - xi))``

    with the removable singularity at ``xi = conj z`` replaced by its limit
    (derivative values of ``E`` are used there).
    """
    z, xi = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(xi, dtype=complex))
    zc = np.conj(z)
    Ez, dEz = E(z)
    Ezc, dEzc = E(zc)
    Exi, _ = E(xi)
    Exic, _ = E(np.conj(xi))
    vals = [Ez, dEz, Ezc, dEzc, Exi, Exic]
    if not all(np.all(np.isfinite(v)) for v in vals):
        raise ValueError(f"non-finite value from entire function {E.label!r}")
    gap = zc - xi
    near = np.abs(gap) < SINGULAR_TOL
    safe_gap = np.where(near, 1.0, gap)
    out = (np.conj(Ez) * Exi - Ezc * np.conj(Exic)) / (2j * safe_gap)
    limit = (np.conj(Ez) * dEzc - Ezc * np.conj(dEz)) / (-2j)
    out = np.where(near, limit, out)
    return out[()] if out.ndim == 0 else out


def kernel_evaluator_from_E(E: EntireEvaluator) -> KernelEvaluator:
    return KernelEvaluator(lambda z, xi: kernel_from_E(E, z, xi), "from_E")


def hb_check(E: EntireEvaluator, grid=None, kernel: KernelEvaluator | None = None) -> HBReport:
    """Test ``|E(z)| > |E(conj z)|`` and ``J_z(z) > 0`` on points of the upper half-plane.

    The diagonal values come from ``kernel`` when given, otherwise from
    :func:`kernel_from_E`.  The report also records whether the two tests
    agree in their verdicts.
    """
    pts = standard_grid() if grid is None else np.asarray(grid, dtype=complex).ravel()
    if pts.size == 0:
        raise ValueError("empty grid")
    if np.any(pts.imag <= 0):
        raise ValueError("grid points must lie in the open upper half-plane")
    Ez = E.value(pts)
    Ezc = E.value(np.conj(pts))
    gap = np.abs(Ez) ** 2 - np.abs(Ezc) ** 2
    K = kernel_from_E(E, pts, pts) if kernel is None else kernel(pts, pts)
    diag = np.real(K)
    hb_ok = bool(np.min(gap) > 0)
    diag_ok = bool(np.min(diag) > 0)
    return HBReport(pts, float(np.min(gap)), float(np.min(diag)), hb_ok and diag_ok, hb_ok == diag_ok)


def E_from_kernel(K: KernelEvaluator, z0: complex = 1j) -> tuple[EntireEvaluator, float]:
    """Build a Hermite-Biehler function whose kernel is ``K``.

    The candidate ``E0(z) = sqrt(pi) (1 - i z) K(i, z) / sqrt(K(i, i))``
    reproduces ``K`` only up to a positive constant.  The constant
    ``c = K(z0, z0) / J_{E0}(z0, z0)`` is computed and ``E = sqrt(c) E0`` is
    returned together with ``c``.
    """
    Kii = complex(K(1j, 1j))
    if not (np.isfinite(Kii) and Kii.real > 0 and abs(Kii.imag) <= 1e-8 * abs(Kii.real)):
        raise ValueError(f"K(i, i) must be positive, got {Kii}")
    scale0 = np.sqrt(np.pi / Kii.real)

    def dK(z):
        if K.dxi is not None:
            return K.dxi(1j, z)
        return cauchy_derivative(lambda w: K(1j, w), z)

    def E0(z):
        kz = K(1j, z)
        return scale0 * (1 - 1j * z) * kz, scale0 * (-1j * kz + (1 - 1j * z) * dK(z))

    cand = EntireEvaluator(E0, "E0")
    ref = complex(K(z0, z0))
    gen = complex(kernel_from_E(cand, z0, z0))
    c = ref.real / gen.real if gen.real != 0 else np.nan
    if not (np.isfinite(c) and c > 0):
        raise ValueError(f"calibration constant {c} is not positive; K is not a reproducing kernel")
    s = np.sqrt(c)

    def E(z):
        v, d = E0(z)
        return s * v, s * d

    return EntireEvaluator(E, f"from kernel ({K.provenance})"), float(c)


# ----------------------------------------------------------------------------
# Axioms in the discrete polynomial spaces
# ----------------------------------------------------------------------------
@dataclass
class AxiomsReport:
    n_samples: int
    omega: complex
    bound_ok: bool
    max_bound_ratio: float
    conjugation_max_rel_err: float
    blaschke_max_rel_err: float
    blaschke_checked: int
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "omega": [float(np.real(self.omega)), float(np.imag(self.omega))],
            "bound_ok": self.bound_ok,
            "max_bound_ratio": self.max_bound_ratio,
            "conjugation_max_rel_err": self.conjugation_max_rel_err,
            "blaschke_max_rel_err": self.blaschke_max_rel_err,
            "blaschke_checked": self.blaschke_checked,
            "passed": self.passed,
        }


def chebyshev_to_power(c) -> np.ndarray:
    """Power-basis coefficients (lowest first) of ``sum_k c[k-1] T_k``."""
    c = np.asarray(c)
    out = np.zeros(max(c.size, 1), dtype=np.result_type(c, float))
    prev, cur = np.zeros(1), np.ones(1)  # T_0, T_1
    for k in range(1, c.size + 1):
        out[: cur.size] += c[k - 1] * cur
        prev, cur = cur, P.polysub(P.polymulx(cur), prev)
    return out


def axioms_check_discrete(T: int, m, samples=None, *, omega: complex = 2j, rng=None,
                          n_random: int = 50, tol: float = 1e-10) -> AxiomsReport:
    """Check the de Branges axioms on elements of ``span{T_1, ..., T_T}``.

    Parameters
    ----------
    T : int
        Dimension of the space.
    m : SpectralMeasure
        Truncated measure with ``N > T``; its atoms define the norm.
    samples : array, shape (n, T), optional
        Coefficients of test functions in the basis ``T_1..T_T``.  Random
        complex coefficients are drawn from ``rng`` when omitted.
    omega : complex
        Point for the evaluation bound.

    Returns
    -------
    AxiomsReport
        Evaluation bound ``|F(omega)| <= sqrt(K(omega, omega)) ||F||``,
        conjugation isometry and the Blaschke isometry at a computed zero.
    """
    from .discrete import chebyshev_table, connecting_from_measure, kernel_from_connecting

    if not m.N > T:
        raise ValueError(f"measure truncation N={m.N} must exceed T={T}")
    if samples is None:
        rng = np.random.default_rng(rng)
        samples = rng.standard_normal((n_random, T)) + 1j * rng.standard_normal((n_random, T))
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    if samples.shape[1] != T:
        raise ValueError(f"samples need {T} coefficients each")

    K = kernel_from_connecting(connecting_from_measure(m, T))
    Kww = float(np.real(K(omega, omega)))
    basis = chebyshev_table(T, m.nodes)[1:]  # (T, n_atoms)
    w = m.weights

    def norm(vals):
        return float(np.sqrt(np.sum(w * np.abs(vals) ** 2)))

    ratios, conj_err, bl_err = [], [], []
    bl_checked = 0
    for c in samples:
        F_at = c @ basis
        nF = norm(F_at)
        Fw = c @ chebyshev_table(T, np.complex128(omega))[1:]
        ratios.append(abs(Fw) / (np.sqrt(Kww) * nF) if nF > 0 else 0.0)
        # F#(z) = conj(F(conj z)) has conjugated coefficients
        nFs = norm(np.conj(c) @ basis)
        conj_err.append(abs(nFs - nF) / nF if nF > 0 else 0.0)
        coeffs = chebyshev_to_power(c)
        nz = np.flatnonzero(np.abs(coeffs) > 0)
        if nz.size and nz[-1] >= 1:
            roots = P.polyroots(coeffs[: nz[-1] + 1])
            root = roots[np.argmax(np.abs(roots.imag))]
            if abs(root.imag) > 1e-8:
                # G = (z - conj w) F / (z - w) as a polynomial of the same degree
                quot, _ = P.polydiv(coeffs[: nz[-1] + 1], np.array([-root, 1.0]))
                G = P.polymul(quot, np.array([-np.conj(root), 1.0]))
                G_at = P.polyval(m.nodes, G)
                bl_err.append(abs(norm(G_at) - nF) / nF)
                bl_checked += 1
    max_ratio = float(max(ratios)) if ratios else 0.0
    bound_ok = max_ratio <= 1.0 + tol
    ce = float(max(conj_err)) if conj_err else 0.0
    be = float(max(bl_err)) if bl_err else 0.0
    return AxiomsReport(
        n_samples=len(samples),
        omega=complex(omega),
        bound_ok=bool(bound_ok),
        max_bound_ratio=max_ratio,
        conjugation_max_rel_err=ce,
        blaschke_max_rel_err=be,
        blaschke_checked=bl_checked,
        passed=bool(bound_ok and ce <= tol and be <= tol),
    )
