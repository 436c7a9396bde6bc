"""Dirac systems with off-diagonal potential and their Schrodinger partners.

For ``V = [[0, q], [q, 0]]`` with ``q(0) = 0`` the Dirac system is tied to
the wave equation with potential ``Q = q' + q**2``.  The checks here compare
the two independent pipelines: response kernels (``r_S = i r_D'``),
cumulative spectral measures and the embedding of the Schrodinger space
into the Dirac one.  All checks return plain dictionaries.
"""
from __future__ import annotations

import numpy as np

from . import dirac, measures, wave
from .grid import SampledPotential, UniformGrid, as_potential

Q0_TOL = 1e-10


def schrodinger_potential(q, grid: UniformGrid, tol: float = Q0_TOL) -> np.ndarray:
    """Samples of ``Q = q' + q**2`` on ``grid`` (second-order differences).

    ``q`` is a callable/spec or an array of samples on ``grid``.
    """
    if callable(q) or isinstance(q, str) or q is None:
        qv = np.asarray(as_potential(q)(grid.nodes), dtype=float)
    else:
        qv = np.asarray(q, dtype=float)
        if qv.shape != (grid.points,):
            raise ValueError(f"expected {grid.points} samples of q")
    scale = max(1.0, float(np.max(np.abs(qv))))
    if abs(qv[0]) > tol * scale:
        raise ValueError(f"q(0) must vanish, got {qv[0]:.3e}")
    return np.gradient(qv, grid.h, edge_order=2) + qv**2


def _partner(q, h: float, length: float) -> SampledPotential:
    n = int(np.ceil(length / h)) + 1
    grid = UniformGrid(h * (n - 1), n)
    return SampledPotential(schrodinger_potential(q, grid), grid.length)


def _dirac_potential(q) -> dirac.MatrixPotential:
    return dirac.MatrixPotential(as_potential(None), as_potential(q))


def response_relation_check(q, T: float, M: int, margin: float = 0.1) -> dict:
    """Max of ``|r_S(t) - i r_D'(t)|`` for ``t`` in ``[margin, 2T - margin]``.

    The margin keeps the one-sided start of both extractions out of the
    comparison.
    """
    h = T / (M - 1)
    Q = _partner(q, h, 2 * T + 12 * h)
    rS = wave.response_kernel(Q, T, M)
    rD = dirac.response_kernel_dirac(_dirac_potential(q), T, M)
    drD = np.gradient(rD.r, h, edge_order=2)
    t = rS.t
    sel = (t >= margin) & (t <= 2 * T - margin)
    err = np.abs(rS.r[sel] - 1j * drD[sel])
    return {
        "M": int(M),
        "h": h,
        "max_error": float(err.max()) if err.size else 0.0,
        "scale": float(np.max(np.abs(rS.r[sel]))) if err.size else 0.0,
    }


def _cumulative(nodes, weights, thresholds):
    order = np.argsort(nodes)
    csum = np.concatenate([[0.0], np.cumsum(weights[order])])
    return csum[np.searchsorted(nodes[order], thresholds, side="right")]


def measure_relation_check(q, N: float, M: int, lam_max: float = 100.0, tol: float = 5e-3) -> dict:
    """Compare ``rho_S(lam)`` with the alpha-squared moments of ``rho_D``.

    Thresholds sit halfway between consecutive Schrodinger nodes (plus one
    below the first node).  Two readings of the Dirac side are reported:
    ``literal`` sums over ``0 < alpha <= sqrt(lam)`` and ``symmetric`` over
    ``|alpha| <= sqrt(lam)``.  The check passes when the literal reading
    agrees within ``tol``.  The symmetric reading is a diagnostic only
    (``symmetric_passed``), and the median ratio ``rho_S / literal`` is
    reported as ``systematic_factor`` without being corrected for.
    """
    rhoS = measures.schrodinger_truncated_measure(_partner(q, N / (M - 1), N + 1.0), N, M)
    rhoD = measures.dirac_truncated_measure(_dirac_potential(q), N, M)
    ns = rhoS.nodes[(rhoS.nodes > 0) & (rhoS.nodes <= lam_max)]
    if ns.size < 2:
        raise ValueError("window holds fewer than two Schrodinger nodes")
    thr = np.concatenate([[0.5 * ns[0]], 0.5 * (ns[1:] + ns[:-1])])
    S = _cumulative(rhoS.nodes, rhoS.weights, thr)
    a, w = rhoD.nodes, rhoD.weights * rhoD.nodes**2
    pos = a > 0
    lit = _cumulative(a[pos], w[pos], np.sqrt(thr))
    sym = _cumulative(np.abs(a), w, np.sqrt(thr))
    nz = S > 0
    # the first threshold lies below every node: both sides must vanish there
    below = float(max(S[0], lit[0], sym[0]))
    rel_sym = float(np.max(np.abs(sym[nz] - S[nz]) / S[nz]))
    rel_lit = float(np.max(np.abs(lit[nz] - S[nz]) / S[nz]))
    factor = float(np.median(S[nz] / lit[nz]))
    below_ok = below <= 1e-12 * float(S[-1])
    return {
        "N": float(N),
        "M": int(M),
        "thresholds": int(thr.size),
        "below_first_node": below,
        "literal_max_rel_error": rel_lit,
        "symmetric_max_rel_error": rel_sym,
        "systematic_factor": factor,
        "tolerance": tol,
        "symmetric_passed": bool(rel_sym <= tol and below_ok),
        "passed": bool(rel_lit <= tol and below_ok),
    }


def embedding_isometry_check(f, q, T: float, M: int) -> dict:
    """``1/4 (C_D (f, f), (f, f))`` against ``(C_S f, f)`` for a real control ``f``."""
    grid = UniformGrid(T, M)
    fv = np.asarray(f(grid.nodes) if callable(f) else f, dtype=float)
    if fv.shape != (M,):
        raise ValueError(f"control needs {M} samples")
    Q = _partner(q, grid.h, 2 * T + 12 * grid.h)
    CS = wave.connecting_build(wave.response_kernel(Q, T, M), T, grid)
    CD = dirac.connecting_build_dirac(dirac.response_kernel_dirac(_dirac_potential(q), T, M), T, grid)
    ff = np.concatenate([fv, fv]).astype(complex)
    lhs = 0.25 * CD.inner(ff, ff)
    rhs = CS.inner(fv, fv)
    diff = abs(lhs - rhs)
    return {
        "M": int(M),
        "lhs": float(lhs.real),
        "lhs_imag": float(lhs.imag),
        "rhs": float(rhs),
        "rel_error": float(diff / abs(rhs)) if rhs != 0 else float(diff),
    }


def special_type_check(f, q, T: float, M: int, lam) -> dict:
    """Transform of the state driven by ``-(f, f)/2`` against ``int_0^T sin(lam s) f(T - s) ds``."""
    grid = UniformGrid(T, M)
    fv = np.asarray(f(grid.nodes) if callable(f) else f, dtype=float)
    V = _dirac_potential(q)
    lam = np.asarray(lam, dtype=float)
    state = dirac.extended_state(V, -0.5 * fv, -0.5 * fv, T, grid.h)
    F_state = dirac.fourier_of_state(V, state, lam, grid)
    s = grid.nodes[:, None]
    direct = np.sum(grid.trapezoid_weights[:, None] * np.sin(lam[None, :] * s) * fv[::-1, None], axis=0)
    return {"M": int(M), "max_error": float(np.max(np.abs(F_state - direct))),
            "scale": float(np.max(np.abs(direct)))}


def _order_pass(e_coarse: float, e_fine: float, min_ratio: float, zero_tol: float) -> bool:
    if e_fine <= zero_tol:
        return True
    return e_coarse / e_fine >= min_ratio


def bridge_report(q, T: float = 1.0, M: int = 201, N: float = 2.0, M_measure: int = 400,
                  min_ratio: float = 1.5, zero_tol: float = 1e-12) -> dict:
    """Run all bridge checks at ``M`` and ``2M - 1`` and summarize them."""
    M2 = 2 * M - 1
    grid = UniformGrid(T, M)
    Qv = schrodinger_potential(q, grid)
    qv = np.asarray(as_potential(q)(grid.nodes), dtype=float)

    rr = [response_relation_check(q, T, m) for m in (M, M2)]
    iso_f = lambda s: np.exp(-((s - 0.5 * T) ** 2) / (0.1 * T**2))  # noqa: E731
    iso = [embedding_isometry_check(iso_f, q, T, m) for m in (M, M2)]
    meas = measure_relation_check(q, N, M_measure)

    rr_ok = _order_pass(rr[0]["max_error"], rr[1]["max_error"], min_ratio, zero_tol)
    iso_ok = _order_pass(iso[0]["rel_error"], iso[1]["rel_error"], min_ratio, zero_tol)
    return {
        "potential_map": {
            "q0": float(qv[0]),
            "Q_min": float(Qv.min()),
            "Q_max": float(Qv.max()),
            "passed": bool(np.all(np.isfinite(Qv))),
        },
        "response_relation": {
            "max_error": rr[1]["max_error"],
            "errors": [rr[0]["max_error"], rr[1]["max_error"]],
            "M": [M, M2],
            "passed": bool(rr_ok),
        },
        "measure_relation": {"max_error": meas["literal_max_rel_error"], **meas},
        "isometry": {
            "max_error": iso[1]["rel_error"],
            "errors": [iso[0]["rel_error"], iso[1]["rel_error"]],
            "M": [M, M2],
            "passed": bool(iso_ok),
        },
    }
