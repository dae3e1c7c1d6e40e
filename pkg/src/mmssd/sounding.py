"""Sounding codebooks and the compressive subspace sampling map.

A codebook holds ``K`` pairs ``(W_k, f_k)``.  Channel use ``k`` observes the
``N_RF`` samples ``y_k = W_k^H H f_k + W_k^H n_k``; the samples of all uses
are stacked k-major into one vector of length ``K * N_RF``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .channel import ChannelMatrix
from .exceptions import DimensionError

__all__ = [
    "SoundingCodebook",
    "SampleVector",
    "min_channel_uses",
    "generate_codebook",
    "affine_map",
    "adjoint_map",
    "sound_channel",
    "check_sampling_budget",
]


@dataclass(frozen=True, eq=False)
class SoundingCodebook:
    """Combiners ``W_k`` (stacked ``(K, Nr, N_RF)``) and precoders ``f_k`` (``(K, Nt)``).

    The analog/digital factors are kept when the codebook was generated here
    and are ``None`` for codebooks loaded from disk or built by hand.
    """

    combiners: np.ndarray
    precoders: np.ndarray
    analog_combiners: Optional[np.ndarray] = None
    analog_precoders: Optional[np.ndarray] = None
    digital_precoders: Optional[np.ndarray] = None

    def __post_init__(self):
        W = np.asarray(self.combiners, dtype=complex)
        F = np.asarray(self.precoders, dtype=complex)
        if W.ndim != 3 or F.ndim != 2 or W.shape[0] != F.shape[0] or W.shape[0] < 1:
            raise DimensionError(
                f"combiners must be (K, Nr, N_RF) and precoders (K, Nt); got {W.shape}, {F.shape}"
            )
        W.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "combiners", W)
        object.__setattr__(self, "precoders", F)

    @property
    def k_uses(self) -> int:
        return self.combiners.shape[0]

    @property
    def nr(self) -> int:
        return self.combiners.shape[1]

    @property
    def n_rf(self) -> int:
        return self.combiners.shape[2]

    @property
    def nt(self) -> int:
        return self.precoders.shape[1]

    @property
    def n_samples(self) -> int:
        return self.k_uses * self.n_rf

    def blocks(self, values) -> np.ndarray:
        """View a stacked sample vector as ``(K, N_RF)``."""
        values = np.asarray(values)
        if values.shape != (self.n_samples,):
            raise DimensionError(f"expected {self.n_samples} samples, got shape {values.shape}")
        return values.reshape(self.k_uses, self.n_rf)

    def subset(self, k_uses: int) -> "SoundingCodebook":
        """The first ``k_uses`` channel uses of this codebook."""
        pick = lambda a: None if a is None else a[:k_uses]
        return SoundingCodebook(
            self.combiners[:k_uses], self.precoders[:k_uses],
            pick(self.analog_combiners), pick(self.analog_precoders), pick(self.digital_precoders),
        )


@dataclass(frozen=True, eq=False)
class SampleVector:
    """Stacked observations ``y`` and the noise variance used to produce them."""

    values: np.ndarray
    noise_var: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1:
            raise DimensionError(f"samples must be one-dimensional, got shape {v.shape}")
        if self.noise_var < 0:
            raise ValueError(f"noise_var must be nonnegative, got {self.noise_var}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


def min_channel_uses(d: int, nr: int, nt: int, n_rf: int) -> float:
    """Channel uses needed to identify a rank-``d`` matrix: ``d (nr + nt - d) / n_rf``.

    >>> min_channel_uses(3, 16, 64, 4)
    57.75
    """
    if n_rf < 1 or d < 1:
        raise DimensionError(f"d and n_rf must be positive, got d={d}, n_rf={n_rf}")
    if d > min(nr, nt):
        raise DimensionError(f"rank bound d={d} exceeds min(nr, nt)={min(nr, nt)}")
    return float(Fraction(d * (nr + nt - d), n_rf))


def check_sampling_budget(codebook: SoundingCodebook, d: int) -> bool:
    """Warn when the codebook has too few uses to identify a rank-``d`` channel.

    Returns True when ``K > d (Nr + Nt - d) / N_RF`` and
    ``K * N_RF >= d * max(Nr, Nt)`` (both subproblem designs overdetermined).
    """
    k_min = min_channel_uses(d, codebook.nr, codebook.nt, codebook.n_rf)
    ok = True
    if codebook.k_uses <= k_min:
        warnings.warn(
            f"K={codebook.k_uses} channel uses does not exceed the identifiability bound "
            f"{k_min:g} for rank bound d={d}",
            RuntimeWarning, stacklevel=3,
        )
        ok = False
    if codebook.n_samples < d * max(codebook.nr, codebook.nt):
        warnings.warn(
            f"K*N_RF={codebook.n_samples} < d*max(Nr, Nt)={d * max(codebook.nr, codebook.nt)}; "
            "subspace subproblems are underdetermined",
            RuntimeWarning, stacklevel=3,
        )
        ok = False
    return ok


def _unit_phases(rng, shape, n):
    return np.exp(2j * np.pi * rng.random(shape)) / np.sqrt(n)


def generate_codebook(nr: int, nt: int, n_rf: int, k_uses: int, rng=None) -> SoundingCodebook:
    """Random constant-modulus sounding codebook.

    Each combiner is an analog matrix with i.i.d. uniform phases and modulus
    ``1/sqrt(nr)`` (identity digital stage).  Each precoder is
    ``F_A F_D s`` with a constant-modulus ``F_A`` (modulus ``1/sqrt(nt)``), a
    complex Gaussian digital stage ``F_D`` and the normalized all-ones pilot
    ``s``; ``F_D`` is scaled so that ``||f_k|| = 1`` exactly.
    """
    if k_uses < 1 or n_rf < 1:
        raise DimensionError(f"k_uses and n_rf must be positive, got {k_uses}, {n_rf}")
    if nr < 1 or nt < 1:
        raise DimensionError(f"array sizes must be positive, got {nr}x{nt}")
    rng = np.random.default_rng(rng)
    W = _unit_phases(rng, (k_uses, nr, n_rf), nr)
    FA = _unit_phases(rng, (k_uses, nt, n_rf), nt)
    FD = (rng.standard_normal((k_uses, n_rf, n_rf)) + 1j * rng.standard_normal((k_uses, n_rf, n_rf))) / np.sqrt(2)
    pilot = np.ones(n_rf) / np.sqrt(n_rf)
    f = np.einsum("kta,kab,b->kt", FA, FD, pilot)
    scale = np.linalg.norm(f, axis=1)
    FD = FD / scale[:, None, None]
    f = f / scale[:, None]
    return SoundingCodebook(W, f, analog_combiners=W, analog_precoders=FA, digital_precoders=FD)


def _check_matrix(codebook: SoundingCodebook, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (codebook.nr, codebook.nt):
        raise DimensionError(f"matrix shape {x.shape} does not match codebook ({codebook.nr}, {codebook.nt})")
    return x


def affine_map(codebook: SoundingCodebook, x) -> np.ndarray:
    """Stack ``W_k^H x f_k`` over all channel uses (k-major)."""
    x = _check_matrix(codebook, x)
    xf = x @ codebook.precoders.T  # (Nr, K)
    return np.einsum("krn,rk->kn", codebook.combiners.conj(), xf).reshape(-1)


def adjoint_map(codebook: SoundingCodebook, values) -> np.ndarray:
    """Adjoint of :func:`affine_map`: ``sum_k W_k y_k f_k^H``."""
    blocks = codebook.blocks(values)
    return np.einsum("krn,kn,kt->rt", codebook.combiners, blocks, codebook.precoders.conj())


def sound_channel(channel, codebook: SoundingCodebook, noise_var: float, rng=None) -> SampleVector:
    """Noisy subspace samples ``W_k^H (H f_k + n_k)`` with ``n_k ~ CN(0, noise_var I)``.

    Noise is colored by the combiners and never whitened.
    """
    if noise_var < 0:
        raise ValueError(f"noise_var must be nonnegative, got {noise_var}")
    H = channel.entries if isinstance(channel, ChannelMatrix) else channel
    clean = affine_map(codebook, H)
    if noise_var == 0:
        return SampleVector(clean, 0.0)
    rng = np.random.default_rng(rng)
    shape = (codebook.k_uses, codebook.nr)
    n = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(noise_var / 2)
    colored = np.einsum("krn,kr->kn", codebook.combiners.conj(), n).reshape(-1)
    return SampleVector(clean + colored, float(noise_var))
