"""Sparse subspace decomposition (SSD) channel estimation.

The channel is modeled as ``H = U diag(lam) V^H`` with a rank bound ``d``
and the relaxed constraints ``tr(U^H U) <= d``, ``tr(V^H V) <= d``.  ``U``,
``V`` and ``lam`` are updated in turn, each by solving its convex
subproblem exactly, until an iteration budget is exhausted or the objective
``||y - A(H)||^2`` stagnates.  The thresholded variant (SSD-T) additionally
stops as soon as the mean squared residual falls below the noise variance.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import DimensionError, RankDeficiencyError
from .metrics import nmse
from .sounding import SampleVector, SoundingCodebook, affine_map, check_sampling_budget
from .subproblems import (
    build_col_design,
    build_power_design,
    build_row_design,
    solve_power_alloc,
    solve_trace_ball_ls,
    unvec,
    vec,
)
from .validation import check_samples

__all__ = [
    "StopReason",
    "SolverConfig",
    "SolveTrace",
    "RankDDecomposition",
    "ssd_estimate",
    "ssd_t_estimate",
    "extract_precoder",
    "SSDEstimator",
]

logger = logging.getLogger(__name__)


class StopReason(str, enum.Enum):
    MAX_ITERS = "max_iters"
    STAGNATED = "stagnated"
    THRESHOLD = "threshold"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by the alternating estimators.

    ``bisect_tol`` defaults to ``1e-9 * d``.  ``noise_var`` is only read by
    the thresholded stopping rule.
    """

    d: int = 3
    max_iters: int = 30
    stagnation_tol: float = 1e-8
    bisect_tol: Optional[float] = None
    noise_var: Optional[float] = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"rank bound d must be >= 1, got {self.d}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.stagnation_tol > 0:
            raise ValueError("stagnation_tol must be positive")
        if self.bisect_tol is not None and not self.bisect_tol > 0:
            raise ValueError("bisect_tol must be positive")
        if self.noise_var is not None and self.noise_var < 0:
            raise ValueError("noise_var must be nonnegative")

    @property
    def bisect_tolerance(self) -> float:
        return 1e-9 * self.d if self.bisect_tol is None else self.bisect_tol


@dataclass
class SolveTrace:
    """Per-iteration history of an alternating estimator."""

    objective: list = field(default_factory=list)
    nmse: list = field(default_factory=list)
    stop_reason: Optional[StopReason] = None

    @property
    def n_iters(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class RankDDecomposition:
    """``H = U diag(power) V^H`` with ``U`` (Nr, d), ``V`` (Nt, d)."""

    col_basis: np.ndarray
    row_basis: np.ndarray
    power: np.ndarray

    @property
    def d(self) -> int:
        return self.power.shape[0]

    def matrix(self) -> np.ndarray:
        return (self.col_basis * self.power) @ self.row_basis.conj().T

    def sorted(self) -> "RankDDecomposition":
        """Columns reordered by descending ``|power|`` (stable)."""
        order = np.argsort(-np.abs(self.power), kind="stable")
        return RankDDecomposition(self.col_basis[:, order], self.row_basis[:, order], self.power[order])


def _init_factors(rng, nr, nt, d):
    def draw(n):
        X = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
        return X * np.sqrt(d) / np.linalg.norm(X)

    U = draw(nr)
    V = draw(nt)
    return U, V, np.ones(d, dtype=complex)


def _residual(y, B, x):
    r = y - B @ x
    return float(np.vdot(r, r).real)


def _power_step(codebook, U, V, y):
    try:
        return solve_power_alloc(codebook, U, V, y)
    except RankDeficiencyError as exc:
        # any least-squares minimizer is a global optimum of this step
        logger.debug("power step rank deficient (%s); using minimum-norm solution", exc)
        P = build_power_design(codebook, U, V)
        return np.linalg.lstsq(P, y, rcond=None)[0]


def _sweep(codebook, y, U, V, lam, d, tol):
    nr, nt = codebook.nr, codebook.nt

    # column basis
    B = build_col_design(codebook, lam, V)
    x_old = vec(U)
    x, _ = solve_trace_ball_ls(B, y, d, tol)
    if _residual(y, B, x) <= _residual(y, B, x_old):
        U = unvec(x, (nr, d))

    # row basis, unknown is vec(V^H)
    B = build_row_design(codebook, U, lam)
    x_old = vec(V.conj().T)
    x, _ = solve_trace_ball_ls(B, y, d, tol)
    if _residual(y, B, x) <= _residual(y, B, x_old):
        V = unvec(x, (d, nt)).conj().T

    # power allocation
    lam_new = _power_step(codebook, U, V, y)
    P = build_power_design(codebook, U, V)
    if _residual(y, P, lam_new) <= _residual(y, P, lam):
        lam = lam_new
    return U, V, lam


def _run(y, codebook, cfg, init_rng, h_true, thresholded):
    y = check_samples(codebook, y)
    if thresholded and cfg.noise_var is None:
        raise ValueError("thresholded SSD needs cfg.noise_var")
    d = cfg.d
    if d > min(codebook.nr, codebook.nt):
        raise DimensionError(f"rank bound d={d} exceeds min(Nr, Nt)={min(codebook.nr, codebook.nt)}")
    check_sampling_budget(codebook, d)

    rng = np.random.default_rng(init_rng)
    U, V, lam = _init_factors(rng, codebook.nr, codebook.nt, d)
    trace = SolveTrace()
    prev = _objective(codebook, y, (U * lam) @ V.conj().T)
    threshold = None
    if thresholded:
        threshold = cfg.noise_var * codebook.n_samples

    for _ in range(cfg.max_iters):
        U, V, lam = _sweep(codebook, y, U, V, lam, d, cfg.bisect_tolerance)
        H = (U * lam) @ V.conj().T
        obj = _objective(codebook, y, H)
        trace.objective.append(obj)
        if h_true is not None:
            trace.nmse.append(nmse(h_true, H))
        if threshold is not None and obj < threshold:
            trace.stop_reason = StopReason.THRESHOLD
            break
        if abs(obj - prev) / max(prev, 1e-30) < cfg.stagnation_tol:
            trace.stop_reason = StopReason.STAGNATED
            break
        prev = obj
    else:
        trace.stop_reason = StopReason.MAX_ITERS

    decomposition = RankDDecomposition(U, V, lam).sorted()
    return decomposition.matrix(), decomposition, trace


def _objective(codebook, y, H):
    r = y - affine_map(codebook, H)
    return float(np.vdot(r, r).real)


def ssd_estimate(y, codebook: SoundingCodebook, cfg: SolverConfig, init_rng=None, h_true=None):
    """Estimate the channel by alternating subspace decomposition.

    Parameters
    ----------
    y : SampleVector or array_like
        Stacked samples, length ``K * N_RF``.
    codebook : SoundingCodebook
    cfg : SolverConfig
    init_rng : None, int, SeedSequence or Generator
        Seeds the random initial ``U``, ``V``.
    h_true : array_like, optional
        When given, the per-iteration NMSE is recorded in the trace.

    Returns
    -------
    H_est : ndarray (Nr, Nt)
    decomposition : RankDDecomposition
        Power entries sorted by descending magnitude.
    trace : SolveTrace
    """
    return _run(y, codebook, cfg, init_rng, h_true, thresholded=False)


def ssd_t_estimate(y, codebook: SoundingCodebook, cfg: SolverConfig, init_rng=None, h_true=None):
    """SSD that also stops once ``||y - A(H)||^2 / (K N_RF) < cfg.noise_var``.

    When ``y`` is a :class:`SampleVector` and ``cfg.noise_var`` is unset,
    the sample vector's noise variance is used.
    """
    if cfg.noise_var is None and isinstance(y, SampleVector):
        cfg = replace(cfg, noise_var=y.noise_var)
    return _run(y, codebook, cfg, init_rng, h_true, thresholded=True)


def extract_precoder(decomposition: RankDDecomposition, n_streams: int):
    """Combiner/precoder pair from the strongest ``n_streams`` subspace pairs.

    The selected columns of ``U`` and ``V`` are orthonormalized (thin QR) so
    that ``W^H W = F^H F = I``.
    """
    if not 1 <= n_streams <= decomposition.d:
        raise DimensionError(f"n_streams={n_streams} must lie in [1, d={decomposition.d}]")
    dec = decomposition.sorted()
    W, _ = np.linalg.qr(dec.col_basis[:, :n_streams])
    F, _ = np.linalg.qr(dec.row_basis[:, :n_streams])
    return W, F


class SSDEstimator(BaseEstimator):
    """Scikit-learn style wrapper around :func:`ssd_estimate`.

    ``fit(codebook, y)`` treats the sounding codebook as the design and the
    stacked samples as the target; :meth:`predict` maps the fitted channel
    through any codebook with matching array sizes.

    Parameters
    ----------
    rank_bound : int
    max_iter : int
    stagnation_tol : float
    bisect_tol : float or None
    thresholding : bool
        Use the noise-variance stopping rule (SSD-T).
    noise_var : float or None
        Needed with ``thresholding=True`` unless ``y`` carries it.
    random_state : None, int or Generator
    """

    def __init__(self, rank_bound=3, max_iter=30, stagnation_tol=1e-8, bisect_tol=None,
                 thresholding=False, noise_var=None, random_state=None):
        self.rank_bound = rank_bound
        self.max_iter = max_iter
        self.stagnation_tol = stagnation_tol
        self.bisect_tol = bisect_tol
        self.thresholding = thresholding
        self.noise_var = noise_var
        self.random_state = random_state

    def _config(self, y):
        noise_var = self.noise_var
        if noise_var is None and isinstance(y, SampleVector):
            noise_var = y.noise_var
        return SolverConfig(self.rank_bound, self.max_iter, self.stagnation_tol, self.bisect_tol, noise_var)

    def fit(self, codebook, y, h_true=None):
        cfg = self._config(y)
        run = ssd_t_estimate if self.thresholding else ssd_estimate
        H, dec, trace = run(y, codebook, cfg, self.random_state, h_true=h_true)
        self.channel_ = H
        self.decomposition_ = dec
        self.trace_ = trace
        self.n_iter_ = trace.n_iters
        self.stop_reason_ = trace.stop_reason
        return self

    def predict(self, codebook):
        check_is_fitted(self, "channel_")
        return affine_map(codebook, self.channel_)

    def precoders(self, n_streams):
        check_is_fitted(self, "decomposition_")
        return extract_precoder(self.decomposition_, n_streams)
