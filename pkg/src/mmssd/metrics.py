import numpy as np

from .exceptions import DimensionError


def nmse(h_true, h_est) -> float:
    """Normalized squared error ``||H - H_est||_F^2 / ||H||_F^2`` of one estimate."""
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise DimensionError(f"shape mismatch {h_true.shape} vs {h_est.shape}")
    ref = np.linalg.norm(h_true) ** 2
    if ref == 0:
        raise ValueError("true channel is identically zero")
    return float(np.linalg.norm(h_true - h_est) ** 2 / ref)
