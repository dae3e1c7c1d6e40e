"""Compressive mmWave MIMO channel estimation by sparse subspace decomposition."""

from .baselines import MFEstimator, SVTEstimator, mf_estimate, nnm_svt_estimate, scan_estimate, subspace_scan
from .bench import ExperimentConfig, ResultRow, aggregate, run_experiment
from .channel import ChannelMatrix, PathParams, generate_channel, ula_response
from .exceptions import DimensionError, NumericalFailureError, RankDeficiencyError
from .metrics import nmse
from .sounding import (
    SampleVector,
    SoundingCodebook,
    affine_map,
    generate_codebook,
    min_channel_uses,
    sound_channel,
)
from .ssd import (
    RankDDecomposition,
    SolverConfig,
    SolveTrace,
    SSDEstimator,
    StopReason,
    extract_precoder,
    ssd_estimate,
    ssd_t_estimate,
)
from .subproblems import (
    bisect_lambda,
    build_col_design,
    build_row_design,
    solve_power_alloc,
    solve_trace_ball_ls,
)

__version__ = "0.1.0"
