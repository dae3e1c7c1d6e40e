"""Sparse geometric mmWave MIMO channels with half-wavelength ULAs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "PathParams",
    "ChannelMatrix",
    "ula_response",
    "channel_from_paths",
    "generate_channel",
    "numerical_rank",
]


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain, departure and arrival angles (rad)."""

    gain: complex
    aod: float
    aoa: float

    def __post_init__(self):
        for name in ("aod", "aoa"):
            value = getattr(self, name)
            if not -np.pi / 2 <= value < np.pi / 2:
                raise ValueError(f"{name}={value} outside [-pi/2, pi/2)")


@dataclass(frozen=True)
class ChannelMatrix:
    """A channel realization together with the paths that generated it."""

    entries: np.ndarray
    paths: tuple[PathParams, ...] = field(default_factory=tuple)

    @property
    def nr(self) -> int:
        return self.entries.shape[0]

    @property
    def nt(self) -> int:
        return self.entries.shape[1]

    @property
    def n_paths(self) -> int:
        return len(self.paths)


def ula_response(n_antennas: int, angle: float) -> np.ndarray:
    """Unit-norm response of a half-wavelength uniform linear array.

    Element ``m`` is ``exp(1j * pi * m * sin(angle)) / sqrt(n_antennas)``.
    """
    if n_antennas < 1:
        raise DimensionError(f"n_antennas must be >= 1, got {n_antennas}")
    m = np.arange(n_antennas)
    return np.exp(1j * np.pi * m * np.sin(angle)) / np.sqrt(n_antennas)


def channel_from_paths(nr: int, nt: int, paths) -> ChannelMatrix:
    """Evaluate ``sqrt(nr*nt/L) * sum_l gain_l a_r(aoa_l) a_t(aod_l)^H``."""
    paths = tuple(paths)
    if not paths:
        raise DimensionError("at least one path is required")
    H = np.zeros((nr, nt), dtype=complex)
    for p in paths:
        H += p.gain * np.outer(ula_response(nr, p.aoa), ula_response(nt, p.aod).conj())
    H *= np.sqrt(nr * nt / len(paths))
    return ChannelMatrix(H, paths)


def generate_channel(nr: int, nt: int, n_paths: int, rng=None) -> ChannelMatrix:
    """Draw a random L-path channel.

    Gains are i.i.d. CN(0, 1); departure and arrival angles are i.i.d. uniform
    on [-pi/2, pi/2).

    Parameters
    ----------
    nr, nt : int
        Receive and transmit array sizes.
    n_paths : int
        Number of paths ``L``, with ``1 <= L <= min(nr, nt)``.
    rng : None, int, SeedSequence or Generator
        Source of randomness, passed through ``np.random.default_rng``.
    """
    if nr < 1 or nt < 1:
        raise DimensionError(f"array sizes must be positive, got {nr}x{nt}")
    if not 1 <= n_paths <= min(nr, nt):
        raise DimensionError(f"n_paths={n_paths} must lie in [1, min(nr, nt)={min(nr, nt)}]")
    rng = np.random.default_rng(rng)
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) / np.sqrt(2)
    aod = rng.uniform(-np.pi / 2, np.pi / 2, n_paths)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, n_paths)
    paths = [PathParams(complex(g), float(t), float(r)) for g, t, r in zip(gains, aod, aoa)]
    return channel_from_paths(nr, nt, paths)


def numerical_rank(X: np.ndarray, rtol: float = 1e-8) -> int:
    """Number of singular values above ``rtol`` times the largest one."""
    s = np.linalg.svd(np.asarray(X), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))
