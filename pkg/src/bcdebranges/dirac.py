"""Boundary-control pipeline for the half-line Dirac system.

The dynamics is ``i u_t + J u_x + V u = 0`` with ``J = [[0, 1], [-1, 0]]``,
``V = [[p, q], [q, -p]]``, zero initial data and control ``u_1(0, t) = f(t)``.
It is solved in the characteristic variables

* ``R = u_1 - i u_2`` moving right:  ``R_t + R_x = (q + i p) L``
* ``L = u_1 + i u_2`` moving left:   ``L_t - L_x = (i p - q) R``

on a grid with ``dx = dt = h``.  Coupling terms use the trapezoid rule along
each characteristic (a 2x2 implicit solve per node), so the free case is
exact and the coupled case is second order.

The extended control space holds pairs ``(f1, f2)`` on ``[0, T]``; pairs are
stored as one vector ``[f1, f2]`` of length ``2M``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import linalg

from .debranges import EntireEvaluator, KernelEvaluator
from .grid import UniformGrid, as_potential
from .wave import _control_samples, _rk4, _steps


@dataclass(frozen=True)
class MatrixPotential:
    """Potential ``V = [[p, q], [q, -p]]`` given by two vectorized callables."""

    p: Callable
    q: Callable

    @classmethod
    def from_specs(cls, p=None, q=None, length: float | None = None) -> "MatrixPotential":
        return cls(as_potential(p, length=length), as_potential(q, length=length))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        pv, qv = self.p(x), self.q(x)
        return np.array([[pv, qv], [qv, -pv]])


def as_matrix_potential(V) -> MatrixPotential:
    if isinstance(V, MatrixPotential):
        return V
    if isinstance(V, tuple) and len(V) == 2:
        return MatrixPotential.from_specs(*V)
    return MatrixPotential.from_specs(None, V)


@dataclass(frozen=True)
class DiracSolution:
    """Tables ``u1[k, i]``, ``u2[k, i]`` at ``x = i h``, ``t = k h``."""

    u1: np.ndarray
    u2: np.ndarray
    h: float

    def state(self, k: int, points: int) -> np.ndarray:
        return np.stack([self.u1[k, :points], self.u2[k, :points]])


def dirac_forward(V, f, T_end: float, h: float, extra: int = 2) -> DiracSolution:
    """Characteristic solver for the controlled Dirac system up to ``T_end``."""
    V = as_matrix_potential(V)
    K = _steps(T_end, h)
    fv = np.asarray(_control_samples(f, K, h), dtype=complex)
    L = K + max(int(extra), 1)
    x = np.arange(L + 1) * h
    pv, qv = V.p(x), V.q(x)
    sig = qv + 1j * pv
    tau = 1j * pv - qv
    a = 0.5 * h
    R = np.zeros((K + 1, L + 1), dtype=complex)
    Lf = np.zeros((K + 1, L + 1), dtype=complex)
    R[0, 0] = 2 * fv[0]
    i = np.arange(1, L)
    den = 1 - a * a * sig[i] * tau[i]
    den0 = 1 + a * tau[0]
    for k in range(K):
        Rk, Lk = R[k], Lf[k]
        er = Rk[i - 1] + a * sig[i - 1] * Lk[i - 1]
        el = Lk[i + 1] + a * tau[i + 1] * Rk[i + 1]
        Rn = np.zeros(L + 1, dtype=complex)
        Ln = np.zeros(L + 1, dtype=complex)
        Rn[i] = (er + a * sig[i] * el) / den
        Ln[i] = (el + a * tau[i] * er) / den
        # wavefront: nothing travels left out of the quiet region
        Rn[k + 1] = Rk[k]
        Ln[k + 1] = 0.0
        Rn[k + 2 :] = 0.0
        Ln[k + 2 :] = 0.0
        # boundary: u1(0, t) = f(t), i.e. R + L = 2 f
        el0 = Lk[1] + a * tau[1] * Rk[1]
        Ln[0] = (el0 + 2 * a * tau[0] * fv[k + 1]) / den0
        Rn[0] = 2 * fv[k + 1] - Ln[0]
        R[k + 1], Lf[k + 1] = Rn, Ln
    return DiracSolution(0.5 * (R + Lf), 0.5j * (R - Lf), h)


def dirac_adjoint_forward(V, g, T_end: float, h: float, extra: int = 2) -> DiracSolution:
    """Adjoint-system solution ``v^g = conj(u^{conj g})``."""
    K = _steps(T_end, h)
    gv = np.asarray(_control_samples(g, K, h), dtype=complex)
    sol = dirac_forward(V, np.conj(gv), T_end, h, extra)
    return DiracSolution(np.conj(sol.u1), np.conj(sol.u2), h)


def extended_state(V, f1, f2, T: float, h: float) -> np.ndarray:
    """``u^{f1}(., T) + v^{f2}(., T)`` on ``x = 0, h, .., T`` (shape ``(2, M)``)."""
    K = _steps(T, h)
    M = K + 1
    out = np.zeros((2, M), dtype=complex)
    if np.any(np.asarray(f1) != 0):
        out += dirac_forward(V, f1, T, h).state(K, M)
    if np.any(np.asarray(f2) != 0):
        out += dirac_adjoint_forward(V, f2, T, h).state(K, M)
    return out


def extended_states(V, T: float, grid: UniformGrid, controls) -> np.ndarray:
    """Extended states for stacked controls ``[f1, f2]`` (rows), shape ``(n, 2M)``."""
    controls = np.atleast_2d(controls)
    M = grid.points
    out = np.empty((controls.shape[0], 2 * M), dtype=complex)
    for n, c in enumerate(controls):
        out[n] = extended_state(V, c[:M], c[M:], T, grid.h).ravel()
    return out


# ----------------------------------------------------------------------------
# Response kernel and connecting operator
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class ResponseKernelD:
    """Regular part ``r`` of the response kernel on ``[0, 2T]`` with step ``h``."""

    t: np.ndarray
    r: np.ndarray
    h: float


def response_kernel_dirac(V, T: float, M: int) -> ResponseKernelD:
    """Response kernel from the Heaviside control ``f = 1``.

    Then ``u_2(0, t) = i + int_0^t r`` and ``r`` is the centered difference
    of ``u_2(0, t) - i``; the value at ``t = 0`` is extrapolated.
    """
    if M < 3:
        raise ValueError("need at least 3 grid points")
    h = T / (M - 1)
    n = 2 * (M - 1)
    K = n + 2
    sol = dirac_forward(V, np.ones(K + 1), K * h, h)
    g = sol.u2[:, 0] - 1j
    r = np.empty(K + 1, dtype=complex)
    r[1:-1] = (g[2:] - g[:-2]) / (2 * h)
    r[0] = 3 * r[1] - 3 * r[2] + r[3]
    return ResponseKernelD(np.arange(n + 1) * h, r[: n + 1], h)


@dataclass(frozen=True)
class ConnectingOpD:
    """Block Nystrom form of ``(C a)(t) = 2 a(t) + int_0^T c(t, s) a(s) ds``."""

    grid: UniformGrid
    kernel: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        w = self.grid.trapezoid_weights
        return np.concatenate([w, w])

    @property
    def matrix(self) -> np.ndarray:
        return 2 * np.eye(2 * self.grid.points) + self.kernel * self.weights[None, :]

    @cached_property
    def form(self) -> np.ndarray:
        w = self.weights
        return np.diag(2 * w).astype(complex) + w[:, None] * self.kernel * w[None, :]

    @cached_property
    def factor(self):
        try:
            return linalg.cho_factor(self.form, lower=False)
        except linalg.LinAlgError as exc:
            raise ValueError("connecting operator is not positive definite") from exc

    def apply(self, a) -> np.ndarray:
        return self.matrix @ np.asarray(a)

    def inner(self, a, b) -> complex:
        """``(a, C b) = sum conj(a_i) form_ij b_j``."""
        return np.conj(np.asarray(a)) @ self.form @ np.asarray(b)

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs)
        w = self.weights.reshape((-1,) + (1,) * (rhs.ndim - 1))
        return linalg.cho_solve(self.factor, w * rhs)


def connecting_build_dirac(rk: ResponseKernelD, T: float, grid: UniformGrid) -> ConnectingOpD:
    """Block kernel built from ``r`` (with ``r(tau) = 0`` for ``tau < 0``)::

        c11 = -i [r(t - s) - conj r(s - t)]     c12 = -i conj r(2T - t - s)
        c21 =  i r(2T - t - s)                  c22 =  i [conj r(t - s) - r(s - t)]
    """
    M = grid.points
    if abs(rk.h - grid.h) > 1e-12 * grid.h or abs(grid.length - T) > 1e-12 * T:
        raise ValueError("response kernel step and control grid do not match")
    if rk.r.size < 2 * (M - 1) + 1:
        raise ValueError("response kernel does not cover [0, 2T]")
    r = rk.r
    i, j = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")

    def rr(idx):
        return np.where(idx >= 0, r[np.clip(idx, 0, None)], 0.0)

    d = i - j
    s = 2 * (M - 1) - i - j
    c11 = -1j * (rr(d) - np.conj(rr(-d)))
    c12 = -1j * np.conj(rr(s))
    c21 = 1j * rr(s)
    c22 = 1j * (np.conj(rr(d)) - rr(-d))
    return ConnectingOpD(grid, np.block([[c11, c12], [c21, c22]]))


def krein_rhs_dirac(z, T: float, grid: UniformGrid) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    tau = (T - grid.nodes)[(...,) + (None,) * z.ndim]
    return np.conj(np.concatenate([1j * np.exp(1j * z * tau), -1j * np.exp(-1j * z * tau)]))


def krein_solve_dirac(C: ConnectingOpD, z, T: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``C (j1, j2) = conj(i e^{iz(T-s)}, -i e^{-iz(T-s)})``."""
    T = C.grid.length if T is None else T
    j = C.solve(krein_rhs_dirac(z, T, C.grid))
    M = C.grid.points
    return j[:M], j[M:]


def transform_dirac(f1, f2, lam, grid: UniformGrid, T: float | None = None):
    """``int_0^T (i e^{i lam (T-s)} f1(s) - i e^{-i lam (T-s)} f2(s)) ds`` by the trapezoid rule."""
    T = grid.length if T is None else T
    lam = np.asarray(lam, dtype=complex)
    ex = (...,) + (None,) * lam.ndim
    tau = (T - grid.nodes)[ex]
    w = grid.trapezoid_weights[ex]
    f1 = np.asarray(f1)[ex]
    f2 = np.asarray(f2)[ex]
    return np.sum(w * (1j * np.exp(1j * lam * tau) * f1 - 1j * np.exp(-1j * lam * tau) * f2), axis=0)


def kernel_krein_dirac(j, lam, grid: UniformGrid, T: float | None = None):
    """``J_z(lam)`` from a Krein solution ``j = (j1, j2)``."""
    return transform_dirac(j[0], j[1], lam, grid, T)


def kernel_krein_evaluator(C: ConnectingOpD) -> KernelEvaluator:
    def K(z, xi):
        z, xi = np.broadcast_arrays(z, xi)
        j1, j2 = krein_solve_dirac(C, z.ravel())
        g = C.grid
        tau = (g.length - g.nodes)[:, None]
        lam = xi.ravel()[None, :]
        w = g.trapezoid_weights[:, None]
        out = np.sum(w * (1j * np.exp(1j * lam * tau) * j1 - 1j * np.exp(-1j * lam * tau) * j2), axis=0)
        return out.reshape(z.shape)

    return KernelEvaluator(K, "from_krein")


# ----------------------------------------------------------------------------
# Direct objects from J theta' + V theta = z theta
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class ThetaResult:
    theta1: np.ndarray
    theta2: np.ndarray
    theta1_z: np.ndarray
    theta2_z: np.ndarray


def _pq_at(V: MatrixPotential, x: float):
    xa = np.array(x)
    return float(V.p(xa)), float(V.q(xa))


def theta_ode(V, N: float, z, steps: int = 400) -> ThetaResult:
    """``theta(N, z)`` with ``theta(0) = (0, 1)`` and its ``z``-derivative, by RK4.

    The system is written as ``theta' = -J (z - V) theta``.
    """
    V = as_matrix_potential(V)
    z = np.asarray(z, dtype=complex)

    def rhs(x, y):
        p, q = _pq_at(V, x)
        a, b, da, db = y
        return np.stack([
            -(z + p) * b + q * a,
            (z - p) * a - q * b,
            -b - (z + p) * db + q * da,
            a + (z - p) * da - q * db,
        ])

    o = np.zeros_like(z)
    y = _rk4(rhs, np.stack([o, o + 1, o, o]), N, steps)
    return ThetaResult(*y)


def theta_profile(V, z, grid: UniformGrid, substeps: int = 4) -> np.ndarray:
    """``theta(x, z)`` at the nodes of ``grid``, shape ``(2, M) + z.shape``."""
    V = as_matrix_potential(V)
    z = np.asarray(z, dtype=complex)

    def rhs(x, y):
        p, q = _pq_at(V, x)
        a, b = y
        return np.stack([-(z + p) * b + q * a, (z - p) * a - q * b])

    o = np.zeros_like(z)
    _, path = _rk4(rhs, np.stack([o, o + 1]), grid.length, (grid.points - 1) * substeps, keep_path=True)
    return np.moveaxis(path[::substeps], 0, 1)


def E_direct_dirac(V, N: float, steps: int = 400) -> EntireEvaluator:
    """``E(z) = theta_1(N, z) - i theta_2(N, z)``."""

    def E(z):
        th = theta_ode(V, N, z, steps)
        return th.theta1 - 1j * th.theta2, th.theta1_z - 1j * th.theta2_z

    return EntireEvaluator(E, f"dirac N={N}")


def kernel_direct_dirac(V, N: float, z, xi, steps: int = 400):
    """``J_z(xi) = int_0^N conj(theta(x, z)) . theta(x, xi) dx`` along the ODE."""
    V = as_matrix_potential(V)
    z, xi = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(xi, dtype=complex))
    zc = np.conj(z)

    def rhs(x, y):
        p, q = _pq_at(V, x)
        a1, a2, b1, b2, _ = y
        return np.stack([
            -(zc + p) * a2 + q * a1,
            (zc - p) * a1 - q * a2,
            -(xi + p) * b2 + q * b1,
            (xi - p) * b1 - q * b2,
            a1 * b1 + a2 * b2,
        ])

    o = np.zeros(z.shape, dtype=complex)
    y = _rk4(rhs, np.stack([o, o + 1, o, o + 1, o]), N, steps)
    return y[4]


def kernel_direct_evaluator(V, N: float, steps: int = 400) -> KernelEvaluator:
    return KernelEvaluator(lambda z, xi: kernel_direct_dirac(V, N, z, xi, steps), "from_direct_sum")


def fourier_of_state(V, state, lam, grid: UniformGrid, substeps: int = 4):
    """``int_0^T (U(x), theta(x, lam)) dx`` (bilinear pairing) for a sampled state ``U``."""
    th = theta_profile(V, lam, grid, substeps)
    lam = np.asarray(lam)
    ex = (...,) + (None,) * lam.ndim
    U = np.asarray(state)
    w = grid.trapezoid_weights[ex]
    return np.sum(w * (U[0][ex] * th[0] + U[1][ex] * th[1]), axis=0)
