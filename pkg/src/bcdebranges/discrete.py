"""Boundary-control pipeline for the semi-infinite discrete Schrodinger operator.

The operator acts as ``(H u)_n = u_{n+1} + u_{n-1} + b_n u_n`` on ``n >= 1``
and the dynamics is driven through the boundary value ``u_{0,t} = f_t``::

    u_{n,t+1} + u_{n,t-1} - u_{n+1,t} - u_{n-1,t} - b_n u_{n,t} = 0,
    u_{n,-1} = u_{n,0} = 0   (n >= 1).

Index conventions used throughout the module:

============================  =============================================
object                        storage
============================  =============================================
potential ``b``               ``b[0] = b_1, b[1] = b_2, ...``
control ``f``                 ``f[0] = f_0`` (earliest sample) .. ``f[T-1]``
response ``r``                ``r[k] = r_k = u^delta_{1,k+1}``, ``k = 0..2T-2``
connecting matrix ``C``       ``C[i, j]`` pairs ``f_i`` with ``f_j``
state at time ``T``           ``W f = (u_{1,T}, ..., u_{T,T})``
Krein solution ``j``          same layout as a control
============================  =============================================
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .debranges import EntireEvaluator, KernelEvaluator


# ----------------------------------------------------------------------------
# Chebyshev polynomials of the second kind, shifted so that T_0 = 0, T_1 = 1.
# ----------------------------------------------------------------------------
def chebyshev_table(kmax: int, lam) -> np.ndarray:
    """Values ``T_0(lam) .. T_kmax(lam)`` stacked along a new first axis.

    The recurrence is ``T_{t+1} = lam T_t - T_{t-1}`` with ``T_0 = 0`` and
    ``T_1 = 1``, so ``T_k`` has degree ``k - 1``.
    """
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    lam = np.asarray(lam)
    dtype = np.result_type(lam, float)
    out = np.zeros((kmax + 1,) + lam.shape, dtype=dtype)
    if kmax >= 1:
        out[1] = 1.0
    for k in range(1, kmax):
        out[k + 1] = lam * out[k] - out[k - 1]
    return out


def chebyshev_T(k: int, lam):
    """``T_k(lam)`` by forward recurrence."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return chebyshev_table(k, lam)[k]


def transform(f, lam) -> np.ndarray:
    """Spectral image ``F(lam) = sum_{k=1}^T T_k(lam) f_{T-k}`` of a control."""
    f = np.asarray(f)
    T = f.size
    tab = chebyshev_table(T, lam)
    # tab[k] multiplies f[T-k] for k = 1..T
    return np.tensordot(f[::-1], tab[1:], axes=(0, 0))


# ----------------------------------------------------------------------------
# Forward dynamics and response
# ----------------------------------------------------------------------------
def _potential(b: Sequence[float], n: int) -> np.ndarray:
    b = np.asarray(b, dtype=float).ravel()
    if not np.all(np.isfinite(b)):
        raise ValueError("potential entries must be finite")
    out = np.zeros(n)
    m = min(n, b.size)
    out[:m] = b[:m]
    return out


@dataclass(frozen=True)
class WaveField:
    """Table ``u[n, t]`` of the discrete dynamics for ``0 <= n, t <= T_max``."""

    u: np.ndarray

    @property
    def T_max(self) -> int:
        return self.u.shape[1] - 1

    def state(self, t: int) -> np.ndarray:
        """State ``(u_{1,t}, ..., u_{t,t})`` at time ``t`` (entries beyond vanish)."""
        return self.u[1 : t + 1, t]

    def trace(self) -> np.ndarray:
        """Boundary-adjacent trace ``u_{1,t}`` for ``t = 0..T_max``."""
        return self.u[1]


def forward(b: Sequence[float], f, T_max: int) -> WaveField:
    """March the discrete wave dynamics up to time ``T_max``.

    ``f`` is zero-padded (or truncated) to ``T_max + 1`` samples and may be
    complex; ``b`` is zero-extended to cover ``n <= T_max``.
    """
    if T_max < 0:
        raise ValueError("T_max must be non-negative")
    f = np.asarray(f).ravel()
    dtype = np.result_type(f, float)
    bb = _potential(b, T_max)
    # one ghost row at the bottom keeps the stencil uniform
    u = np.zeros((T_max + 2, T_max + 1), dtype=dtype)
    m = min(f.size, T_max + 1)
    u[0, :m] = f[:m]
    for t in range(T_max):
        nxt = u[2:, t] + u[:-2, t] + bb * u[1:-1, t]
        if t >= 1:
            nxt = nxt - u[1:-1, t - 1]
        u[1:-1, t + 1] = nxt
    return WaveField(u[: T_max + 1])


def response(b: Sequence[float], T: int) -> np.ndarray:
    """Response vector ``r_k = u^delta_{1,k+1}``, ``k = 0..2T-2``."""
    if T < 1:
        raise ValueError("T must be at least 1")
    field = forward(b, [1.0], 2 * T - 1)
    return field.trace()[1 : 2 * T].astype(float)


def response_operator(b: Sequence[float], f, T: int) -> np.ndarray:
    """Boundary trace ``(u^f_{1,1}, ..., u^f_{1,T})`` of the dynamics."""
    return forward(b, f, T).trace()[1 : T + 1]


def control_operator(b: Sequence[float], T: int) -> np.ndarray:
    """Matrix ``W`` with ``W[n-1, l] = u^{e_l}_{n,T}`` from basis-control solves."""
    W = np.zeros((T, T))
    for l in range(T):
        e = np.zeros(T)
        e[l] = 1.0
        W[:, l] = forward(b, e, T).state(T)
    return W


def state_at(b: Sequence[float], f, T: int) -> np.ndarray:
    """State ``(u^f_{1,T}, ..., u^f_{T,T})`` for a control of length ``T``."""
    return forward(b, f, T).state(T)


def gram_matrix(b: Sequence[float], T: int) -> np.ndarray:
    """``W^T W`` assembled from forward solves (the dynamical definition)."""
    W = control_operator(b, T)
    return W.T @ W


# ----------------------------------------------------------------------------
# Connecting matrix
# ----------------------------------------------------------------------------
def connecting_from_response(r, T: int) -> np.ndarray:
    """``C_ij = sum_{k=0}^{T-max(i,j)} r_{|i-j|+2k}`` (1-based ``i, j``)."""
    r = np.asarray(r, dtype=float).ravel()
    if r.size < 2 * T - 1:
        raise ValueError(f"response vector too short: need {2 * T - 1} entries, got {r.size}")
    if r[0] != 1.0:
        raise ValueError(f"r_0 = 1 invariant violated (r_0 = {r[0]!r})")
    r = r[: 2 * T - 1]
    # prefix sums along each parity class: P[m] = r[m] + r[m-2] + ...
    P = r.copy()
    P[2:] = 0.0
    for m in range(2, r.size):
        P[m] = r[m] + P[m - 2]
    i, j = np.meshgrid(np.arange(1, T + 1), np.arange(1, T + 1), indexing="ij")
    d = np.abs(i - j)
    last = d + 2 * (T - np.maximum(i, j))
    below = d - 2
    C = P[last] - np.where(below >= 0, P[np.clip(below, 0, None)], 0.0)
    return C


def connecting_from_measure(m, T: int) -> np.ndarray:
    """``C_{l+1,m+1} = sum_k w_k T_{T-l}(lam_k) T_{T-m}(lam_k)``.

    The measure must come from a truncation beyond the light cone (``N > T``).
    """
    if not m.N > T:
        raise ValueError(f"measure truncation N={m.N} must exceed T={T}")
    tab = chebyshev_table(T, m.nodes)[1:][::-1]  # row l holds T_{T-l}
    return (tab * m.weights) @ tab.T


# ----------------------------------------------------------------------------
# Krein equation and reproducing kernel
# ----------------------------------------------------------------------------
@dataclass(frozen=True)
class KreinSolutionD:
    """Solution ``j`` of ``C j = conj(T_T(z), ..., T_1(z))`` for one ``z``."""

    j: np.ndarray
    z: complex

    @property
    def T(self) -> int:
        return self.j.size


def _factor(C: np.ndarray):
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("connecting matrix must be square")
    try:
        return linalg.cho_factor(C, lower=False, check_finite=True)
    except linalg.LinAlgError as exc:
        raise ValueError("connecting matrix is not positive definite") from exc


def krein_rhs(z, T: int) -> np.ndarray:
    return np.conj(chebyshev_table(T, np.complex128(z))[1:][::-1])


def krein_solve_many(C: np.ndarray, zs) -> list[KreinSolutionD]:
    """Krein solutions for several points sharing one Cholesky factorization."""
    cf = _factor(C)
    T = cf[0].shape[0]
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    rhs = np.stack([krein_rhs(z, T) for z in zs], axis=1)
    J = linalg.cho_solve(cf, rhs)
    return [KreinSolutionD(J[:, k].copy(), complex(z)) for k, z in enumerate(zs)]


def krein_solve(C: np.ndarray, z: complex, T: int | None = None) -> KreinSolutionD:
    """Solve the discrete Krein equation at one point ``z``."""
    C = np.asarray(C, dtype=float)
    if T is not None and C.shape != (T, T):
        raise ValueError(f"connecting matrix has shape {C.shape}, expected {(T, T)}")
    return krein_solve_many(C, [z])[0]


def kernel_krein(sol: KreinSolutionD, lam) -> np.ndarray:
    """``J_z(lam) = sum_{k=1}^T T_k(lam) j_{T-k}``."""
    return transform(sol.j, lam)


def kernel_from_connecting(C: np.ndarray) -> KernelEvaluator:
    """Reproducing kernel of the span of ``T_1..T_T`` as a two-point evaluator."""
    cf = _factor(C)
    T = cf[0].shape[0]

    def K(z, xi):
        z, xi = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(xi, dtype=complex))
        rhs = np.conj(chebyshev_table(T, z.ravel())[1:][::-1])
        j = linalg.cho_solve(cf, rhs)
        tab = chebyshev_table(T, xi.ravel())[1:][::-1]
        return np.sum(j * tab, axis=0).reshape(z.shape)

    return KernelEvaluator(K, "from_krein")


# ----------------------------------------------------------------------------
# Direct (spectral) objects
# ----------------------------------------------------------------------------
def phi_table(b: Sequence[float], n_max: int, lam, derivative: bool = False):
    """Solutions ``phi_0 .. phi_{n_max}`` of ``phi_{n+1} = (lam - b_n) phi_n - phi_{n-1}``.

    With ``phi_0 = 0`` and ``phi_1 = 1``.  When ``derivative`` is set the
    lam-derivatives are returned as a second table.
    """
    lam = np.asarray(lam)
    dtype = np.result_type(lam, float)
    bb = _potential(b, max(n_max, 1))
    phi = np.zeros((n_max + 1,) + lam.shape, dtype=dtype)
    dphi = np.zeros_like(phi)
    if n_max >= 1:
        phi[1] = 1.0
    for n in range(1, n_max):
        phi[n + 1] = (lam - bb[n - 1]) * phi[n] - phi[n - 1]
        dphi[n + 1] = phi[n] + (lam - bb[n - 1]) * dphi[n] - dphi[n - 1]
    return (phi, dphi) if derivative else phi


def kernel_direct(b: Sequence[float], N: int, z, xi):
    """``J_z(xi) = sum_{i=1}^N conj(phi_i(z)) phi_i(xi)``."""
    z, xi = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(xi, dtype=complex))
    pz = phi_table(b, N, z)[1:]
    px = phi_table(b, N, xi)[1:]
    return np.sum(np.conj(pz) * px, axis=0)


def E_direct(b: Sequence[float], N: int) -> EntireEvaluator:
    """Hermite-Biehler function ``E = phi_N - i phi_{N+1}``."""
    if N < 1:
        raise ValueError("N must be at least 1")
    b = _potential(b, N)

    def E(z):
        phi, dphi = phi_table(b, N + 1, np.asarray(z, dtype=complex), derivative=True)
        return phi[N] - 1j * phi[N + 1], dphi[N] - 1j * dphi[N + 1]

    return EntireEvaluator(E, f"discrete N={N}")


# ----------------------------------------------------------------------------
# Inverse problem
# ----------------------------------------------------------------------------
def recover_potential(C: np.ndarray, T: int | None = None, diag_tol: float = 1e-8) -> np.ndarray:
    """Recover ``b_1..b_{T-1}`` from the connecting matrix.

    In reversed control order the control operator is unit upper
    triangular, so it coincides with the Cholesky factor of the reversed
    connecting matrix.  Its first superdiagonal holds the cumulative sums
    ``w_{n,n} = b_1 + ... + b_n``.
    """
    C = np.asarray(C, dtype=float)
    if T is None:
        T = C.shape[0]
    if C.shape != (T, T):
        raise ValueError(f"connecting matrix has shape {C.shape}, expected {(T, T)}")
    try:
        U = linalg.cholesky(C[::-1, ::-1], lower=False)
    except linalg.LinAlgError as exc:
        raise ValueError("connecting matrix is not positive definite") from exc
    dev = np.max(np.abs(np.diag(U) - 1.0))
    if dev > diag_tol:
        raise ValueError(f"Cholesky diagonal deviates from 1 by {dev:.3e}; response data inconsistent")
    w = np.diag(U, 1)
    return np.diff(np.concatenate([[0.0], w]))
