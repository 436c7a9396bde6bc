"""Truncated spectral measures of the three systems and measure-weighted sums.

Each system is cut off at ``N`` with a Dirichlet condition; the resulting
finite self-adjoint eigenproblem gives a finite atomic measure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .discrete import chebyshev_table
from .grid import UniformGrid, as_potential

SYSTEMS = ("discrete", "schrodinger", "dirac")
MERGE_RTOL = 1e-12


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite atomic measure: strictly increasing ``nodes`` with positive ``weights``."""

    nodes: np.ndarray
    weights: np.ndarray
    system: str
    N: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if nodes.shape != weights.shape:
            raise ValueError("nodes and weights differ in length")
        if self.system not in SYSTEMS:
            raise ValueError(f"unknown system tag {self.system!r}")
        if not (np.all(np.isfinite(nodes)) and np.all(np.isfinite(weights))):
            raise ValueError("measure atoms must be finite")
        if np.any(weights <= 0):
            raise ValueError("measure weights must be positive")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("measure nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(cls, nodes, weights, system: str, N: float, rtol: float = MERGE_RTOL) -> "SpectralMeasure":
        """Sort atoms and merge nodes closer than ``rtol`` (relative) by adding weights."""
        nodes = np.asarray(nodes, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        order = np.argsort(nodes, kind="stable")
        nodes, weights = nodes[order], weights[order]
        keep_n, keep_w = [], []
        for x, w in zip(nodes, weights):
            if keep_n and abs(x - keep_n[-1]) <= rtol * max(1.0, abs(x)):
                keep_w[-1] += w
            else:
                keep_n.append(x)
                keep_w.append(w)
        return cls(np.array(keep_n), np.array(keep_w), system, N)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.nodes.tolist(), self.weights.tolist()))

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def integrate(self, g) -> complex:
        """``sum_k w_k g(lam_k)`` for a vectorized callable ``g``."""
        return np.sum(self.weights * g(self.nodes))

    def to_dict(self) -> dict:
        N = int(self.N) if float(self.N).is_integer() and self.system == "discrete" else float(self.N)
        return {"atoms": [[float(x), float(w)] for x, w in self.atoms], "system": self.system, "N": N}

    @classmethod
    def from_dict(cls, d: dict) -> "SpectralMeasure":
        atoms = np.asarray(d["atoms"], dtype=float).reshape(-1, 2)
        return cls.from_atoms(atoms[:, 0], atoms[:, 1], d["system"], d["N"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SpectralMeasure":
        return cls.from_dict(json.loads(text))


def jacobi_truncated_measure(b, N: int) -> SpectralMeasure:
    """Spectral measure of the ``N x N`` Jacobi matrix (diagonal ``b``, unit off-diagonal).

    Weights are the squared first components of the unit eigenvectors.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    b = np.asarray(b, dtype=float).ravel()
    d = np.zeros(N)
    d[: min(N, b.size)] = b[:N]
    if not np.all(np.isfinite(d)):
        raise ValueError("potential entries must be finite")
    if N == 1:
        lam, v = d.copy(), np.ones((1, 1))
    else:
        lam, v = linalg.eigh_tridiagonal(d, np.ones(N - 1))
    w = v[0] ** 2
    if np.any(w <= 0):
        raise ArithmeticError("vanishing first eigenvector component in a Jacobi matrix")
    return SpectralMeasure.from_atoms(lam, w, "discrete", N)


def schrodinger_truncated_measure(q, N: float, M: int) -> SpectralMeasure:
    """Finite-difference measure of ``-phi'' + q phi`` on ``(0, N)`` with ``phi(0) = phi(N) = 0``.

    Eigenfunctions are normalized by ``phi'(0) = 1``, which gives the
    weight ``v_1**2 / h**3`` for a unit eigenvector ``v`` of the
    three-point matrix.
    """
    if M < 3:
        raise ValueError("need at least 3 grid points")
    grid = UniformGrid(N, M)
    h = grid.h
    x = grid.nodes[1:-1]
    qv = np.asarray(as_potential(q, length=N)(x), dtype=float)
    if not np.all(np.isfinite(qv)):
        raise ValueError("potential samples must be finite")
    n = M - 2
    if n == 1:
        lam, v = np.array([2 / h**2 + qv[0]]), np.ones((1, 1))
    else:
        lam, v = linalg.eigh_tridiagonal(2 / h**2 + qv, np.full(n - 1, -1 / h**2))
    w = v[0] ** 2 / h**3
    return SpectralMeasure.from_atoms(lam, w, "schrodinger", N)


def _pq(V, N):
    if hasattr(V, "p") and hasattr(V, "q"):
        return V.p, V.q
    if isinstance(V, tuple) and len(V) == 2:
        return as_potential(V[0], length=N), as_potential(V[1], length=N)
    return as_potential(None), as_potential(V, length=N)


def dirac_matrix(V, N: float, M: int) -> tuple[np.ndarray, UniformGrid]:
    """Staggered first-order discretization of ``J theta' + V theta`` on ``(0, N)``.

    ``theta_1`` lives on the interior integer nodes (it vanishes at both
    ends), ``theta_2`` on the ``M - 1`` half nodes.  The coupling through
    ``q`` is split symmetrically between neighbouring nodes so the matrix is
    symmetric.
    """
    if M < 3:
        raise ValueError("need at least 3 grid points")
    grid = UniformGrid(N, M)
    h = grid.h
    p, q = _pq(V, N)
    n1, n2 = M - 2, M - 1
    xi = grid.nodes[1:-1]
    xh = (np.arange(n2) + 0.5) * h
    P1 = np.diag(np.asarray(p(xi), dtype=float))
    P2 = np.diag(np.asarray(p(xh), dtype=float))
    # B[i, k] couples theta_1 at node i+1 with theta_2 at half node k
    B = np.zeros((n1, n2))
    rows = np.arange(n1)
    B[rows, rows + 1] = 1 / h + 0.5 * q((rows + 1.25) * h)
    B[rows, rows] = -1 / h + 0.5 * q((rows + 0.75) * h)
    A = np.block([[P1, B], [B.T, -P2]])
    if not np.all(np.isfinite(A)):
        raise ValueError("potential samples must be finite")
    return A, grid


def dirac_truncated_measure(V, N: float, M: int) -> SpectralMeasure:
    """Spectral measure of the Dirac system on ``(0, N)`` with ``theta_1 = 0`` at both ends.

    ``V`` is a matrix potential with ``p`` and ``q`` attributes, a tuple
    ``(p, q)`` of potential specs, or a single spec taken as ``q`` with
    ``p = 0``.  Eigenvectors are normalized by ``theta_2(0) = 1``, the
    boundary value being extrapolated from the first two half nodes.
    """
    A, grid = dirac_matrix(V, N, M)
    lam, v = linalg.eigh(A)
    n1 = M - 2
    t2_0 = 0.5 * (3 * v[n1] - v[n1 + 1])
    w = t2_0**2 / grid.h
    keep = w > 0
    return SpectralMeasure.from_atoms(lam[keep], w[keep], "dirac", N)


def measure_inner_product(m: SpectralMeasure, F, G) -> complex:
    """``sum_k w_k conj(F_k) G_k`` for values at the atoms."""
    F = np.asarray(F)
    G = np.asarray(G)
    if F.shape[-1] != m.nodes.size or G.shape[-1] != m.nodes.size:
        raise ValueError(f"values must match the {m.nodes.size} atoms")
    return np.sum(m.weights * np.conj(F) * G, axis=-1)


def response_from_measure(m: SpectralMeasure, k: int) -> float:
    """``sum_j w_j T_k(lam_j)``; equals ``r_{k-1}`` for a Jacobi measure with ``N`` beyond the light cone."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return float(np.sum(m.weights * chebyshev_table(k, m.nodes)[k]))
