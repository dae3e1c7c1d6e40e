"""Reference estimators: matrix factorization, max-power scanning, SVT.

``nnm_svt_estimate`` is a proximal-gradient nuclear-norm surrogate, not a
constrained nuclear-norm minimization solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DimensionError
from .metrics import nmse
from .sounding import SoundingCodebook, adjoint_map, affine_map, check_sampling_budget
from .ssd import SolverConfig, SolveTrace, StopReason
from .subproblems import build_col_design, build_row_design, unvec
from .validation import check_samples

__all__ = [
    "ScanOutcome",
    "mf_estimate",
    "subspace_scan",
    "scan_estimate",
    "nnm_svt_estimate",
    "MFEstimator",
    "SVTEstimator",
]

_RIDGE_EPS = 1e-10


def _lstsq(B, y):
    Q, s, Rh = np.linalg.svd(B, full_matrices=False)
    c = Q.conj().T @ y
    if s.size == B.shape[1] and s[0] > 0 and s[-1] > s[0] * max(B.shape) * np.finfo(float).eps:
        return Rh.conj().T @ (c / s)
    # rank deficient: (B^H B + eps I)^{-1} B^H y
    return Rh.conj().T @ (c * s / (s * s + _RIDGE_EPS))


def _objective(codebook, y, H):
    r = y - affine_map(codebook, H)
    return float(np.vdot(r, r).real)


def mf_estimate(y, codebook: SoundingCodebook, d: int, cfg: SolverConfig | None = None,
                init_rng=None, h_true=None):
    """Two-factor fit ``H = U V`` by alternating unconstrained least squares.

    ``U`` is (Nr, d) and ``V`` is stored (d, Nt).  Initialization draws both
    factors with i.i.d. CN(0, 1) entries; iteration limits and the
    stagnation rule come from ``cfg``.

    Returns ``(H_est, trace)``.
    """
    y = check_samples(codebook, y)
    if cfg is None:
        cfg = SolverConfig(d=d)
    if d > min(codebook.nr, codebook.nt):
        raise DimensionError(f"rank bound d={d} exceeds min(Nr, Nt)")
    check_sampling_budget(codebook, d)
    rng = np.random.default_rng(init_rng)
    nr, nt = codebook.nr, codebook.nt
    U = (rng.standard_normal((nr, d)) + 1j * rng.standard_normal((nr, d))) / np.sqrt(2)
    V = (rng.standard_normal((d, nt)) + 1j * rng.standard_normal((d, nt))) / np.sqrt(2)
    ones = np.ones(d)
    trace = SolveTrace()
    prev = _objective(codebook, y, U @ V)
    for _ in range(cfg.max_iters):
        # A(U V) = B_col(Lambda=I, V^H) vec(U) = B_row(U, I) vec(V)
        U = unvec(_lstsq(build_col_design(codebook, ones, V.conj().T), y), (nr, d))
        V = unvec(_lstsq(build_row_design(codebook, U, ones), y), (d, nt))
        H = U @ V
        obj = _objective(codebook, y, H)
        trace.objective.append(obj)
        if h_true is not None:
            trace.nmse.append(nmse(h_true, H))
        if abs(obj - prev) / max(prev, 1e-30) < cfg.stagnation_tol:
            trace.stop_reason = StopReason.STAGNATED
            break
        prev = obj
    else:
        trace.stop_reason = StopReason.MAX_ITERS
    return U @ V, trace


@dataclass(frozen=True)
class ScanOutcome:
    """Selected channel use (1-based) and the received power of every use."""

    best_index: int
    powers: np.ndarray


def subspace_scan(per_use_samples) -> ScanOutcome:
    """Pick the channel use with the largest ``||y_k||^2``; ties go to the lowest ``k``."""
    blocks = [np.asarray(v).reshape(-1) for v in per_use_samples]
    if not blocks:
        raise ValueError("subspace scan needs at least one channel use")
    powers = np.array([float(np.vdot(v, v).real) for v in blocks])
    return ScanOutcome(int(np.argmax(powers)) + 1, powers)


def scan_estimate(y, codebook: SoundingCodebook):
    """Channel guess from the best scanned pair alone.

    Returns ``(H_est, outcome)`` where ``H_est`` is the minimum-norm matrix
    reproducing the selected sample, ``W_k (W_k^H W_k)^+ y_k f_k^H / ||f_k||^2``.
    """
    y = check_samples(codebook, y)
    blocks = codebook.blocks(y)
    outcome = subspace_scan(blocks)
    k = outcome.best_index - 1
    W = codebook.combiners[k]
    f = codebook.precoders[k]
    a = np.linalg.pinv(W.conj().T @ W) @ blocks[k]
    H = np.outer(W @ a, f.conj()) / float(np.vdot(f, f).real)
    return H, outcome


def _operator_norm_sq(codebook, iters=100, rng=0):
    rng = np.random.default_rng(rng)
    X = rng.standard_normal((codebook.nr, codebook.nt)) + 1j * rng.standard_normal((codebook.nr, codebook.nt))
    est = 0.0
    for _ in range(iters):
        X /= np.linalg.norm(X)
        X = adjoint_map(codebook, affine_map(codebook, X))
        new = np.linalg.norm(X)
        if abs(new - est) <= 1e-10 * new:
            est = new
            break
        est = new
    return est


def _svt(X, tau):
    Q, s, Rh = np.linalg.svd(X, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (Q * s) @ Rh, s


def nnm_svt_estimate(y, codebook: SoundingCodebook, mu: float, step: float | None = None,
                     iters: int = 500, tol: float = 1e-12, h_true=None):
    """Nuclear-norm regularized fit by proximal gradient.

    Minimizes ``0.5 ||y - A(H)||^2 + mu ||H||_*`` with gradient steps followed
    by singular-value soft-thresholding at ``step * mu``.  The default step
    is the inverse of ``||A||^2`` estimated by power iteration, with a 1%
    margin; three consecutive objective increases halve the step.

    Returns ``(H_est, trace)``; the trace holds the regularized objective.
    """
    y = check_samples(codebook, y)
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if step is None:
        step = 0.99 / _operator_norm_sq(codebook)
    H = np.zeros((codebook.nr, codebook.nt), dtype=complex)

    def objective(H, s=None):
        if s is None:
            s = np.linalg.svd(H, compute_uv=False)
        r = y - affine_map(codebook, H)
        return 0.5 * float(np.vdot(r, r).real) + mu * float(np.sum(s))

    trace = SolveTrace()
    prev = objective(H)
    rises = 0
    for _ in range(iters):
        grad = adjoint_map(codebook, affine_map(codebook, H) - y)
        H_new, s = _svt(H - step * grad, step * mu)
        obj = objective(H_new, s)
        if obj > prev:
            rises += 1
            if rises >= 3:
                step /= 2
                rises = 0
        else:
            rises = 0
        H = H_new
        trace.objective.append(obj)
        if h_true is not None:
            trace.nmse.append(nmse(h_true, H))
        if abs(prev - obj) <= tol * max(prev, 1e-30):
            trace.stop_reason = StopReason.STAGNATED
            break
        prev = obj
    else:
        trace.stop_reason = StopReason.MAX_ITERS
    return H, trace


class MFEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`mf_estimate`."""

    def __init__(self, rank_bound=3, max_iter=30, stagnation_tol=1e-8, random_state=None):
        self.rank_bound = rank_bound
        self.max_iter = max_iter
        self.stagnation_tol = stagnation_tol
        self.random_state = random_state

    def fit(self, codebook, y, h_true=None):
        cfg = SolverConfig(self.rank_bound, self.max_iter, self.stagnation_tol)
        self.channel_, self.trace_ = mf_estimate(y, codebook, self.rank_bound, cfg, self.random_state, h_true)
        self.n_iter_ = self.trace_.n_iters
        return self

    def predict(self, codebook):
        check_is_fitted(self, "channel_")
        return affine_map(codebook, self.channel_)


class SVTEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`nnm_svt_estimate`."""

    def __init__(self, mu=1.0, step=None, max_iter=500, tol=1e-12):
        self.mu = mu
        self.step = step
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, codebook, y, h_true=None):
        self.channel_, self.trace_ = nnm_svt_estimate(
            y, codebook, self.mu, self.step, self.max_iter, self.tol, h_true
        )
        self.n_iter_ = self.trace_.n_iters
        return self

    def predict(self, codebook):
        check_is_fitted(self, "channel_")
        return affine_map(codebook, self.channel_)
