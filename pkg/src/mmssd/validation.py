"""Input checks shared by the estimators."""

import numpy as np

from .exceptions import DimensionError
from .sounding import SampleVector, SoundingCodebook


def check_codebook(codebook) -> SoundingCodebook:
    if not isinstance(codebook, SoundingCodebook):
        raise TypeError(f"expected a SoundingCodebook, got {type(codebook).__name__}")
    return codebook


def check_samples(codebook, y) -> np.ndarray:
    """Return ``y`` as a finite complex vector matching ``codebook``."""
    check_codebook(codebook)
    values = y.values if isinstance(y, SampleVector) else np.asarray(y, dtype=complex)
    if values.shape != (codebook.n_samples,):
        raise DimensionError(
            f"expected {codebook.n_samples} samples (K={codebook.k_uses}, N_RF={codebook.n_rf}), "
            f"got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("samples contain NaN or inf")
    return values
