"""Convex subproblems of the alternating subspace decomposition.

With two of ``(U, Lambda, V)`` fixed, the sampling residual is linear in the
third, so each update is a (possibly norm-constrained) least-squares problem:

* column basis: ``A(U Lambda V^H) = B_col vec(U)``
* row basis:    ``A(U Lambda V^H) = B_row vec(V^H)``
* power:        ``A(U Lambda V^H) = P diag(Lambda)``

``vec`` stacks columns (Fortran order).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, NumericalFailureError, RankDeficiencyError
from .sounding import SoundingCodebook

__all__ = [
    "build_col_design",
    "build_row_design",
    "build_power_design",
    "bisect_lambda",
    "solve_trace_ball_ls",
    "solve_power_alloc",
    "vec",
    "unvec",
]

_EPS = np.finfo(float).eps


def vec(X: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x: np.ndarray, shape) -> np.ndarray:
    return np.asarray(x).reshape(shape, order="F")


def _factor_shapes(codebook, n_rows, factor, d=None, name="factor"):
    factor = np.asarray(factor)
    if factor.ndim != 2 or factor.shape[0] != n_rows or (d is not None and factor.shape[1] != d):
        raise DimensionError(f"{name} has shape {factor.shape}, expected ({n_rows}, {d if d else 'd'})")
    return factor


def _power(lam, d):
    lam = np.asarray(lam)
    if lam.ndim == 2:
        lam = np.diag(lam)
    if lam.shape != (d,):
        raise DimensionError(f"power allocation has shape {lam.shape}, expected ({d},)")
    return lam


def build_col_design(codebook: SoundingCodebook, lam, V) -> np.ndarray:
    """Design ``B`` with ``A(U Lambda V^H) = B vec(U)``; shape ``(K N_RF, d Nr)``.

    Block ``k`` is ``(Lambda V^H f_k)^T kron W_k^H``.
    """
    V = _factor_shapes(codebook, codebook.nt, V, name="V")
    d = V.shape[1]
    lam = _power(lam, d)
    g = lam[None, :] * (codebook.precoders @ V.conj())  # (K, d): Lambda V^H f_k
    B = np.einsum("kj,krn->knjr", g, codebook.combiners.conj())
    return B.reshape(codebook.n_samples, d * codebook.nr)


def build_row_design(codebook: SoundingCodebook, U, lam) -> np.ndarray:
    """Design ``B`` with ``A(U Lambda V^H) = B vec(V^H)``; shape ``(K N_RF, d Nt)``.

    Block ``k`` is ``f_k^T kron M_k`` with ``M_k = W_k^H U Lambda``.
    """
    U = _factor_shapes(codebook, codebook.nr, U, name="U")
    d = U.shape[1]
    lam = _power(lam, d)
    M = np.einsum("krn,rj->knj", codebook.combiners.conj(), U) * lam[None, None, :]
    B = np.einsum("kt,knj->kntj", codebook.precoders, M)
    return B.reshape(codebook.n_samples, d * codebook.nt)


def build_power_design(codebook: SoundingCodebook, U, V) -> np.ndarray:
    """Matrix ``P`` whose column ``j`` is ``A(u_j v_j^H)``."""
    U = _factor_shapes(codebook, codebook.nr, U, name="U")
    V = _factor_shapes(codebook, codebook.nt, V, d=U.shape[1], name="V")
    WU = np.einsum("krn,rj->knj", codebook.combiners.conj(), U)
    vf = codebook.precoders @ V.conj()  # (K, d): v_j^H f_k
    return (WU * vf[:, None, :]).reshape(codebook.n_samples, U.shape[1])


def bisect_lambda(g, d: float, tol: float, max_doublings: int = 200, max_bisections: int = 400) -> float:
    """Root of ``g(lam) = d`` for a continuous decreasing ``g`` on ``(0, inf)``.

    An upper bound starting at 1 is doubled until ``g(hi) < d``; the bracket
    ``[0, hi]`` is then bisected until ``|g(lam) - d| <= tol``.  If the
    bracket collapses to floating-point resolution first, the feasible end
    (``g(hi) <= d``) is returned.
    """
    hi = 1.0
    ghi = g(hi)
    n = 0
    while ghi >= d:
        if abs(ghi - d) <= tol:
            return hi
        n += 1
        if n > max_doublings:
            raise NumericalFailureError(
                f"no bracket for g(lam)={d} after {max_doublings} doublings (g({hi:g})={ghi:g})"
            )
        hi *= 2.0
        ghi = g(hi)
    lo = 0.0
    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if abs(gm - d) <= tol:
            return mid
        if gm > d:
            lo = mid
        else:
            hi = mid
    return hi


def solve_trace_ball_ls(B, y, d: float, tol: float | None = None):
    """Minimize ``||y - B x||^2`` subject to ``||x||^2 <= d``.

    Returns ``(x, lam)``.  When the least-squares solution is feasible it is
    returned with ``lam = 0``; otherwise ``x = (B^H B + lam I)^{-1} B^H y``
    with ``lam > 0`` chosen by bisection so that ``||x||^2 = d`` to within
    ``tol`` (default ``1e-9 * d``).

    Everything is computed from a thin SVD of ``B``, which makes the ridge
    path ``g(lam) = sum |c_i|^2 s_i^2 / (s_i^2 + lam)^2`` cheap to evaluate.
    A numerically rank-deficient ``B`` skips the unconstrained branch and
    solves the ridge branch with the constraint active; if even the
    minimum-norm least-squares solution is feasible, that one is returned.
    """
    B = np.asarray(B)
    y = np.asarray(y)
    if B.ndim != 2 or y.shape != (B.shape[0],):
        raise DimensionError(f"incompatible shapes B{B.shape}, y{y.shape}")
    if not d > 0:
        raise ValueError(f"radius must be positive, got {d}")
    if tol is None:
        tol = 1e-9 * d
    n = B.shape[1]
    Q, s, Rh = np.linalg.svd(B, full_matrices=False)
    c = Q.conj().T @ y
    if s.size == 0 or s[0] == 0.0 or not np.any(c):
        return np.zeros(n, dtype=np.result_type(B, y, complex)), 0.0

    cutoff = s[0] * max(B.shape) * _EPS
    full_rank = s.size == n and s[-1] > cutoff
    keep = s > cutoff
    c2 = np.abs(c) ** 2

    def solution(lam):
        return Rh.conj().T @ (c * s / (s * s + lam))

    if full_rank:
        x = Rh.conj().T @ (c / s)
        if np.vdot(x, x).real <= d:
            return x, 0.0
    elif np.sum(c2[keep] / s[keep] ** 2) <= d:
        coef = np.zeros_like(c)
        coef[keep] = c[keep] / s[keep]
        return Rh.conj().T @ coef, 0.0

    s2 = s * s
    w = c2 * s2

    def g(lam):
        t = 1.0 / (s2 + lam)
        return float(w @ (t * t))

    lam = bisect_lambda(g, d, tol)
    return solution(lam), lam


def solve_power_alloc(codebook: SoundingCodebook, U, V, y, rcond: float | None = None) -> np.ndarray:
    """Least-squares power allocation ``diag(Lambda) = argmin ||y - P lam||``.

    Raises
    ------
    RankDeficiencyError
        If the columns of ``P`` are numerically dependent; the message names
        the subspace pairs ``(u_j, v_j)`` that could not be resolved.
    """
    P = build_power_design(codebook, U, V)
    y = np.asarray(y)
    if y.shape != (P.shape[0],):
        raise DimensionError(f"expected {P.shape[0]} samples, got shape {y.shape}")
    Q, R, piv = scipy.linalg.qr(P, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if rcond is None:
        rcond = max(P.shape) * _EPS
    if diag.size == 0 or diag[0] == 0.0:
        raise RankDeficiencyError(f"all subspace pairs {list(range(P.shape[1]))} sample to zero")
    bad = np.nonzero(diag <= rcond * diag[0])[0]
    if bad.size:
        raise RankDeficiencyError(
            f"power design is rank deficient; subspace pairs {sorted(piv[bad].tolist())} "
            "are linearly dependent on the others"
        )
    z = scipy.linalg.solve_triangular(R, Q.conj().T @ y)
    lam = np.empty_like(z)
    lam[piv] = z
    return lam
