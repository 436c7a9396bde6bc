"""Boundary-control pipeline for the half-line wave equation with potential.

The dynamics is ``u_tt - u_xx + q(x) u = 0`` on ``x > 0`` with zero initial
data and Dirichlet control ``u(0, t) = f(t)``.  Everything is discretized on
characteristic-aligned grids (``dx = dt = h``), which makes the free case
exact.

Controls on ``[0, T]`` are stored oldest-first on a :class:`UniformGrid` and
states at time ``T`` are sampled on the same nodes in ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import factorial
from typing import Callable

import numpy as np
from scipy import linalg
from scipy.integrate import cumulative_trapezoid

from .debranges import EntireEvaluator, KernelEvaluator
from .grid import UniformGrid, as_potential

# ----------------------------------------------------------------------------
# sin(sqrt(z) s) / sqrt(z) as an entire function of z
# ----------------------------------------------------------------------------
_SERIES_TERMS = 24
_SERIES_COEF = np.array([(-1) ** m / factorial(2 * m + 1) for m in range(_SERIES_TERMS)])


def sinc_entire(s, z):
    """Value and ``z``-derivative of ``sin(sqrt(z) s) / sqrt(z)``.

    Uses the even power series in ``sqrt(z)`` for ``|z| s**2 <= 1`` and the
    closed form with the principal square root elsewhere.
    """
    s, z = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(z, dtype=complex))
    val = np.empty(s.shape, dtype=complex)
    der = np.empty(s.shape, dtype=complex)
    small = np.abs(z) * s**2 <= 1.0

    if np.any(small):
        ss, zz = s[small], z[small]
        u = zz * ss**2
        # sum_m c_m u^m and its derivative, by Horner
        v = np.zeros_like(zz)
        d = np.zeros_like(zz)
        for m in range(_SERIES_TERMS - 1, -1, -1):
            d = d * u + v
            v = v * u + _SERIES_COEF[m]
        val[small] = ss * v
        der[small] = ss**3 * d
    big = ~small
    if np.any(big):
        ss, zz = s[big], z[big]
        w = np.sqrt(zz)
        sn, cs = np.sin(w * ss), np.cos(w * ss)
        val[big] = sn / w
        der[big] = (ss * w * cs - sn) / (2 * w**3)
    if val.ndim == 0:
        return val[()], der[()]
    return val, der


# ----------------------------------------------------------------------------
# Forward solver
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class WaveSolution:
    """Table ``u[k, i] ~ u(i h, k h)`` of the wave field."""

    u: np.ndarray
    h: float

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.u.shape[1]) * self.h

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.u.shape[0]) * self.h

    def state(self, k: int, points: int) -> np.ndarray:
        """State at time level ``k`` on the first ``points`` spatial nodes."""
        return self.u[k, :points]


def _steps(T_end: float, h: float) -> int:
    K = int(round(T_end / h))
    if K < 1 or abs(K * h - T_end) > 1e-9 * max(1.0, T_end):
        raise ValueError(f"grid mismatch: T_end={T_end} is not a multiple of h={h}")
    return K


def _control_samples(f, K: int, h: float) -> np.ndarray:
    if callable(f):
        return np.asarray(f(np.arange(K + 1) * h))
    f = np.asarray(f)
    if f.ndim != 1 or f.size < K + 1:
        raise ValueError(f"grid mismatch: control needs {K + 1} samples, got {f.size}")
    return f[: K + 1]


def wave_forward(q, f, T_end: float, h: float, extra: int = 2) -> WaveSolution:
    """Leapfrog solution at unit CFL up to ``T_end``.

    ``u_i^{k+1} = u_{i+1}^k + u_{i-1}^k - u_i^{k-1} - h^2 q_i u_i^k``

    The potential term at the wavefront node is taken with half weight
    (the field jumps there, and the half weight is the trapezoid value of
    the jump), which keeps second order for controls with ``f(0) != 0``.
    The spatial domain extends ``extra`` nodes past the front so the state
    at ``x = T_end`` is kept.
    """
    K = _steps(T_end, h)
    fv = _control_samples(f, K, h)
    L = K + max(int(extra), 1)
    qv = np.asarray(as_potential(q)(np.arange(L + 1) * h), dtype=float)
    dtype = np.result_type(fv, float)
    u = np.zeros((K + 1, L + 1), dtype=dtype)
    u[0, 0] = fv[0]
    hq = h * h * qv[1:-1]
    for k in range(K):
        cur = u[k]
        eff = cur[1:-1].copy()
        if 1 <= k:
            eff[k - 1] *= 0.5
        new = cur[2:] + cur[:-2] - hq * eff
        if k >= 1:
            new -= u[k - 1, 1:-1]
        u[k + 1, 1:-1] = new
        u[k + 1, 0] = fv[k + 1]
    return WaveSolution(u, h)


def control_states(q, T: float, grid: UniformGrid, controls) -> np.ndarray:
    """States ``u^f(., T)`` on ``grid`` for each control row (shape ``(n, M)``)."""
    controls = np.atleast_2d(controls)
    M = grid.points
    out = np.empty(controls.shape, dtype=np.result_type(controls, float))
    for n, f in enumerate(controls):
        sol = wave_forward(q, f, T, grid.h)
        out[n] = sol.state(M - 1, M)
    return out


# ----------------------------------------------------------------------------
# Response kernel
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class ResponseKernelS:
    """Samples of ``r`` and ``p(t) = 1/2 int_0^t r`` on ``[0, 2T]`` with step ``h``."""

    t: np.ndarray
    r: np.ndarray
    h: float
    route: str

    @cached_property
    def p(self) -> np.ndarray:
        return 0.5 * cumulative_trapezoid(self.r, self.t, initial=0.0)


def _fill_start(t, r, n_fit: int = 8, deg: int = 2):
    """Replace non-finite leading/isolated entries by a polynomial fit and interpolation."""
    ok = np.isfinite(r)
    idx = np.flatnonzero(ok)
    out = r.copy()
    lead = np.arange(idx[0])
    if lead.size:
        fit = idx[:n_fit]
        out[lead] = np.polyval(np.polyfit(t[fit], r[fit], deg), t[lead])
    gaps = np.flatnonzero(~ok)
    gaps = gaps[gaps > idx[0]]
    if gaps.size:
        out[gaps] = np.interp(t[gaps], t[ok], r[ok])
    return out


def _response_ramp(q, T: float, M: int):
    h = T / (M - 1)
    n = 2 * (M - 1)
    K = n + 4
    t = np.arange(K + 1) * h
    # ramp in units of h keeps the free field integer valued (exact arithmetic)
    sol = wave_forward(q, np.arange(K + 1, dtype=float), K * h, h, extra=4)
    U = sol.u
    # u_x(0, t) from nodes 0, 2, 4 so that only one leapfrog sublattice is used
    m = (-3 * U[:, 0] + 4 * U[:, 2] - U[:, 4]) / 4
    g = m + 1.0
    r = np.full(K + 1, np.nan)
    r[2:-2] = (g[4:] - 2 * g[2:-2] + g[:-4]) / (4 * h * h)
    r[:6] = np.nan
    return t[: n + 1], r[: n + 1]


def goursat_kernel(q, T: float, M: int):
    """Kernel ``w(x, t)`` on ``0 <= x <= t <= 2T`` from the characteristic problem.

    Uses ``w(x, x) = -1/2 int_0^x q`` and ``w(0, t) = 0``; only the
    sublattice ``x + t`` even is filled.  Returns ``(t, r, W)`` with
    ``r = w_x(0, .)`` on even time indices (``nan`` elsewhere).
    """
    h = T / (M - 1)
    K = 2 * (M - 1) + 4
    x = np.arange(K + 1) * h
    qv = np.asarray(as_potential(q)(x), dtype=float)
    Qc = cumulative_trapezoid(qv, x, initial=0.0)
    W = np.full((K + 1, K + 1), np.nan)
    W[np.arange(K + 1), np.arange(K + 1)] = -0.5 * Qc
    W[0, ::2] = 0.0
    for k in range(2, K + 1):
        i = np.arange(k % 2, k - 1, 2)
        i = i[i >= 1]
        if i.size == 0:
            continue
        east, west, south = W[i + 1, k - 1], W[i - 1, k - 1], W[i, k - 2]
        W[i, k] = east + west - south - h * h * qv[i] * (east + west) / 2
    r = np.full(K + 1, np.nan)
    ks = np.arange(4, K + 1, 2)
    r[ks] = (-3 * W[0, ks] + 4 * W[2, ks] - W[4, ks]) / (4 * h)
    n = 2 * (M - 1)
    return x[: n + 1], r[: n + 1], W


def response_kernel(q, T: float, M: int, route: str = "ramp") -> ResponseKernelS:
    """Response kernel ``r`` on ``[0, 2T]`` sampled with step ``T / (M - 1)``.

    ``route="ramp"`` drives the system with ``f(t) = t``; then
    ``u_x(0, t) = -1 + int_0^t (t - s) r(s) ds`` and ``r`` is the second
    derivative of ``u_x(0, t) + 1``.  ``route="goursat"`` reads ``r`` from
    the characteristic problem for the kernel ``w`` instead.
    """
    if M < 3:
        raise ValueError("need at least 3 grid points")
    if route == "ramp":
        t, r = _response_ramp(q, T, M)
    elif route == "goursat":
        t, r, _ = goursat_kernel(q, T, M)
    else:
        raise ValueError(f"unknown route {route!r}")
    return ResponseKernelS(t, _fill_start(t, r), T / (M - 1), route)


def route_agreement(q, T: float, M: int, t_min: float = 0.05) -> float:
    """Max difference between the ramp and characteristic routes on ``[t_min, 2T]``."""
    _, ra = _response_ramp(q, T, M)
    t, rg, _ = goursat_kernel(q, T, M)
    sel = np.isfinite(ra) & np.isfinite(rg) & (t >= t_min)
    return float(np.max(np.abs(ra[sel] - rg[sel])))


# ----------------------------------------------------------------------------
# Connecting operator and Krein equation
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class ConnectingOpS:
    """Nystrom form of ``(C f)(t) = f(t) + int_0^T c(t, s) f(s) ds``.

    ``kernel[i, j] = c(t_i, t_j)``.  ``matrix`` is the operator acting on
    nodal values and ``form`` the symmetric matrix of ``(f, C g)`` with
    trapezoid weights.
    """

    grid: UniformGrid
    kernel: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.grid.trapezoid_weights

    @property
    def matrix(self) -> np.ndarray:
        return np.eye(self.grid.points) + self.kernel * self.weights[None, :]

    @cached_property
    def form(self) -> np.ndarray:
        w = self.weights
        return np.diag(w) + w[:, None] * self.kernel * w[None, :]

    @cached_property
    def factor(self):
        try:
            return linalg.cho_factor(self.form, lower=False)
        except linalg.LinAlgError as exc:
            raise ValueError("connecting operator is not positive definite") from exc

    def apply(self, f) -> np.ndarray:
        return self.matrix @ np.asarray(f)

    def inner(self, f, g) -> complex:
        """``(f, C g) = sum conj(f_i) form_ij g_j``."""
        return np.conj(np.asarray(f)) @ self.form @ np.asarray(g)

    def solve(self, rhs) -> np.ndarray:
        """Solve ``C j = rhs`` for nodal ``rhs`` (one column per right-hand side)."""
        rhs = np.asarray(rhs)
        w = self.weights.reshape((-1,) + (1,) * (rhs.ndim - 1))
        return linalg.cho_solve(self.factor, w * rhs)


def connecting_build(rk: ResponseKernelS, T: float, grid: UniformGrid) -> ConnectingOpS:
    """``c(t, s) = p(2T - t - s) - p(|t - s|)`` on the control grid."""
    M = grid.points
    if abs(rk.h - grid.h) > 1e-12 * grid.h or abs(grid.length - T) > 1e-12 * T:
        raise ValueError("response kernel step and control grid do not match")
    if rk.p.size < 2 * (M - 1) + 1:
        raise ValueError("response kernel does not cover [0, 2T]")
    p = rk.p
    i, j = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    K = p[2 * (M - 1) - i - j] - p[np.abs(i - j)]
    return ConnectingOpS(grid, K)


def krein_rhs_wave(z, T: float, grid: UniformGrid) -> np.ndarray:
    s = grid.nodes
    z = np.asarray(z, dtype=complex)
    val, _ = sinc_entire(T - s[(...,) + (None,) * z.ndim], z)
    return np.conj(val)


def krein_solve_wave(C: ConnectingOpS, z, T: float | None = None) -> np.ndarray:
    """``(C j_z)(s) = conj(sin(sqrt(z) (T - s)) / sqrt(z))`` on the grid.

    ``z`` may be an array; then the result has shape ``(M,) + z.shape``.
    """
    T = C.grid.length if T is None else T
    return C.solve(krein_rhs_wave(z, T, C.grid))


def kernel_krein_wave(j, mu, grid: UniformGrid, T: float | None = None):
    """``J_z(mu) = int_0^T sin(sqrt(mu)(T - s)) / sqrt(mu) j_z(s) ds`` by the trapezoid rule."""
    T = grid.length if T is None else T
    mu = np.asarray(mu, dtype=complex)
    S, _ = sinc_entire(T - grid.nodes[(...,) + (None,) * mu.ndim], mu)
    j = np.asarray(j).reshape((-1,) + (1,) * mu.ndim)
    return np.sum(grid.trapezoid_weights.reshape(j.shape) * S * j, axis=0)


def transform_wave(f, mu, grid: UniformGrid):
    """``F(mu) = int_0^T sin(sqrt(mu) s)/sqrt(mu) f(T - s) ds`` for nodal ``f`` on ``grid``."""
    return kernel_krein_wave(f, mu, grid)


def kernel_krein_evaluator(C: ConnectingOpS) -> KernelEvaluator:
    grid = C.grid

    def K(z, xi):
        z, xi = np.broadcast_arrays(z, xi)
        J = krein_solve_wave(C, z.ravel())
        S, _ = sinc_entire(grid.length - grid.nodes[:, None], xi.ravel()[None, :])
        return np.sum(grid.trapezoid_weights[:, None] * S * J, axis=0).reshape(z.shape)

    return KernelEvaluator(K, "from_krein")


# ----------------------------------------------------------------------------
# Direct objects from the spectral ODE -phi'' + q phi = z phi
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class PhiResult:
    phi: np.ndarray
    dphi: np.ndarray
    phi_z: np.ndarray
    dphi_z: np.ndarray


def _rk4(rhs: Callable, y0: np.ndarray, N: float, steps: int, keep_path: bool = False):
    h = N / steps
    y = y0
    path = [y0] if keep_path else None
    x = 0.0
    for n in range(steps):
        k1 = rhs(x, y)
        k2 = rhs(x + h / 2, y + h / 2 * k1)
        k3 = rhs(x + h / 2, y + h / 2 * k2)
        k4 = rhs(x + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x = (n + 1) * h
        if keep_path:
            path.append(y)
    return (y, np.stack(path)) if keep_path else y


def phi_ode(q, N: float, z, steps: int = 1000) -> PhiResult:
    """``phi(N, z)``, ``phi'(N, z)`` and their ``z``-derivatives.

    ``phi`` solves ``-phi'' + q phi = z phi`` with ``phi(0) = 0``,
    ``phi'(0) = 1``; RK4 with ``steps`` uniform steps, augmented by the
    ``z``-differentiated system ``psi'' = (q - z) psi - phi``.
    """
    qf = as_potential(q)
    z = np.asarray(z, dtype=complex)

    def rhs(x, y):
        qx = float(qf(np.array(x)))
        phi, dphi, psi, dpsi = y
        return np.stack([dphi, (qx - z) * phi, dpsi, (qx - z) * psi - phi])

    y0 = np.stack([np.zeros_like(z), np.ones_like(z), np.zeros_like(z), np.zeros_like(z)])
    y = _rk4(rhs, y0, N, steps)
    return PhiResult(*y)


def phi_profile(q, z, grid: UniformGrid, substeps: int = 4) -> np.ndarray:
    """``phi(x, z)`` at the nodes of ``grid`` (RK4 with ``substeps`` per cell)."""
    qf = as_potential(q)
    z = np.asarray(z, dtype=complex)

    def rhs(x, y):
        qx = float(qf(np.array(x)))
        return np.stack([y[1], (qx - z) * y[0]])

    y0 = np.stack([np.zeros_like(z), np.ones_like(z)])
    _, path = _rk4(rhs, y0, grid.length, (grid.points - 1) * substeps, keep_path=True)
    return path[::substeps, 0]


def E_direct_wave(q, N: float, steps: int = 1000) -> EntireEvaluator:
    """``E(z) = phi(N, z) + i phi'(N, z)``."""

    def E(z):
        res = phi_ode(q, N, z, steps)
        return res.phi + 1j * res.dphi, res.phi_z + 1j * res.dphi_z

    return EntireEvaluator(E, f"wave N={N}")


def kernel_direct_wave(q, N: float, z, xi, steps: int = 1000):
    """``J_z(xi) = int_0^N conj(phi(x, z)) phi(x, xi) dx`` integrated along the ODE."""
    qf = as_potential(q)
    z, xi = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(xi, dtype=complex))
    zc = np.conj(z)

    def rhs(x, y):
        qx = float(qf(np.array(x)))
        a, da, b, db, _ = y
        return np.stack([da, (qx - zc) * a, db, (qx - xi) * b, a * b])

    o, e = np.zeros(z.shape, dtype=complex), np.ones(z.shape, dtype=complex)
    y = _rk4(rhs, np.stack([o, e, o, e, o]), N, steps)
    return y[4]


def kernel_direct_evaluator(q, N: float, steps: int = 1000) -> KernelEvaluator:
    return KernelEvaluator(lambda z, xi: kernel_direct_wave(q, N, z, xi, steps), "from_direct_sum")
