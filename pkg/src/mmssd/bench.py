"""Monte-Carlo benchmark of the channel estimators.

Every ``(snr, K, trial)`` cell draws one channel, one codebook and one noisy
sample vector, and all algorithms are run on that same data from the same
initialization seed.  Seeds are derived with
``np.random.SeedSequence([master_seed, snr_index, k_index, trial])`` and
split into four child streams (channel, codebook, noise, initialization),
so any single cell can be regenerated on its own.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .baselines import mf_estimate, nnm_svt_estimate, scan_estimate
from .channel import generate_channel
from .io import format_float
from .metrics import nmse
from .sounding import generate_codebook, sound_channel
from .ssd import SolverConfig, ssd_estimate, ssd_t_estimate

__all__ = [
    "ALGORITHMS",
    "ExperimentConfig",
    "ResultRow",
    "SummaryRow",
    "nmse",
    "snr_to_noise_var",
    "trial_streams",
    "run_experiment",
    "aggregate",
    "load_config",
    "parse_config",
    "write_results_csv",
    "read_results_csv",
    "write_summary_csv",
    "RESULT_HEADER",
]

ALGORITHMS = ("ssd", "ssd_t", "mf", "scan", "nnm_svt")

RESULT_HEADER = ["algorithm", "snr_db", "k_uses", "trial", "nmse", "wall_time_s", "iters", "stop_reason"]

# approximate recipes; the published grids are only shown on figure axes
FIG3_SNR_DB = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
FIG4_K_USES = (60, 80, 100, 120, 140, 160)


def snr_to_noise_var(snr_db: float) -> float:
    """Noise variance for unit-power sounding, ``10 ** (-snr_db / 10)``."""
    return 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    nr: int = 16
    nt: int = 64
    n_paths: int = 2
    rank_bound: int = 3
    n_rf: int = 4
    n_streams: int = 2
    snr_db_grid: tuple = FIG3_SNR_DB
    k_grid: tuple = (100,)
    n_trials: int = 100
    master_seed: int = 0
    algorithms: tuple = ("ssd", "ssd_t", "mf")
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(d=3))
    nnm_mu: float = 1.0
    nnm_iters: int = 500

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.snr_db_grid or not self.k_grid:
            raise ValueError("SNR and K grids must be nonempty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if self.solver.d != self.rank_bound:
            object.__setattr__(self, "solver", replace(self.solver, d=self.rank_bound))
        if not 1 <= self.n_streams <= self.rank_bound:
            raise ValueError(f"n_streams must lie in [1, rank_bound], got {self.n_streams}")
        if self.rank_bound < self.n_paths:
            warnings.warn(
                f"rank bound {self.rank_bound} is below the number of paths {self.n_paths}",
                RuntimeWarning, stacklevel=3,
            )


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    snr_db: float
    k_uses: int
    trial: int
    nmse: float
    wall_time_s: float
    iters: int
    stop_reason: str
    sample_hash: str = ""

    @property
    def failed(self) -> bool:
        return math.isnan(self.nmse)

    def csv_fields(self):
        return [self.algorithm, format_float(self.snr_db), str(self.k_uses), str(self.trial),
                format_float(self.nmse), format_float(self.wall_time_s), str(self.iters), self.stop_reason]


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    snr_db: float
    k_uses: int
    mean_nmse: float
    mean_wall_time_s: float
    mean_iters: float
    successes: int
    failures: int


def trial_streams(master_seed: int, snr_index: int, k_index: int, trial: int):
    """Channel, codebook, noise and initialization seed sequences of one cell."""
    return np.random.SeedSequence([master_seed, snr_index, k_index, trial]).spawn(4)


def _run_algorithm(name, cfg, y, codebook, noise_var, init_seed, h_true):
    solver = replace(cfg.solver, noise_var=noise_var)
    if name == "ssd":
        H, _, tr = ssd_estimate(y, codebook, solver, np.random.default_rng(init_seed))
    elif name == "ssd_t":
        H, _, tr = ssd_t_estimate(y, codebook, solver, np.random.default_rng(init_seed))
    elif name == "mf":
        H, tr = mf_estimate(y, codebook, cfg.rank_bound, solver, np.random.default_rng(init_seed))
    elif name == "scan":
        H, _ = scan_estimate(y, codebook)
        return H, 1, "scan"
    elif name == "nnm_svt":
        H, tr = nnm_svt_estimate(y, codebook, cfg.nnm_mu * math.sqrt(noise_var), iters=cfg.nnm_iters)
    else:
        raise ValueError(f"unknown algorithm {name!r}")
    return H, tr.n_iters, str(tr.stop_reason)


def run_cell(cfg: ExperimentConfig, snr_index: int, k_index: int, trial: int):
    """All algorithm rows for one ``(snr, K, trial)`` cell."""
    snr_db = float(cfg.snr_db_grid[snr_index])
    k_uses = int(cfg.k_grid[k_index])
    s_chan, s_code, s_noise, s_init = trial_streams(cfg.master_seed, snr_index, k_index, trial)
    noise_var = snr_to_noise_var(snr_db)
    channel = generate_channel(cfg.nr, cfg.nt, cfg.n_paths, np.random.default_rng(s_chan))
    codebook = generate_codebook(cfg.nr, cfg.nt, cfg.n_rf, k_uses, np.random.default_rng(s_code))
    y = sound_channel(channel, codebook, noise_var, np.random.default_rng(s_noise))
    digest = hashlib.sha256(y.values.tobytes()).hexdigest()[:16]

    rows = []
    for name in cfg.algorithms:
        start = time.perf_counter()
        try:
            H, iters, stop = _run_algorithm(name, cfg, y, codebook, noise_var, s_init, channel.entries)
            elapsed = time.perf_counter() - start
            err = nmse(channel.entries, H)
            if not math.isfinite(err):
                err, stop = math.nan, "failed:nonfinite"
        except Exception as exc:  # a failed trial is recorded, never fatal to the sweep
            elapsed = time.perf_counter() - start
            err, iters, stop = math.nan, 0, f"failed:{type(exc).__name__}"
        rows.append(ResultRow(name, snr_db, k_uses, trial, err, elapsed, iters, stop, digest))
    return rows


def run_experiment(cfg: ExperimentConfig, threads: int = 1, progress=None) -> list:
    """Run every ``(snr, K, trial)`` cell and return the result rows.

    Rows are sorted by grid position, trial and algorithm order, so the
    output does not depend on ``threads``.
    """
    cells = [(i, j, t) for i in range(len(cfg.snr_db_grid))
             for j in range(len(cfg.k_grid)) for t in range(cfg.n_trials)]
    work = lambda c: run_cell(cfg, *c)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(work, cells))
        else:
            chunks = []
            for n, c in enumerate(cells):
                chunks.append(work(c))
                if progress is not None:
                    progress(n + 1, len(cells))
    order = {name: i for i, name in enumerate(cfg.algorithms)}
    snr_pos = {float(s): i for i, s in enumerate(cfg.snr_db_grid)}
    k_pos = {int(k): i for i, k in enumerate(cfg.k_grid)}
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (snr_pos[r.snr_db], k_pos[r.k_uses], r.trial, order[r.algorithm]))
    return rows


def aggregate(rows) -> list:
    """Mean NMSE, wall time and iterations per ``(algorithm, snr_db, k_uses)``.

    Failed rows (NaN nmse) are left out of the means and counted in
    ``failures``.
    """
    cells = {}
    for r in rows:
        cells.setdefault((r.algorithm, r.snr_db, r.k_uses), []).append(r)
    out = []
    for (alg, snr, k), group in sorted(cells.items()):
        ok = [r for r in group if not r.failed]
        mean = lambda xs: math.fsum(xs) / len(xs) if xs else math.nan  # order independent
        out.append(SummaryRow(
            alg, snr, k,
            mean([r.nmse for r in ok]),
            mean([r.wall_time_s for r in ok]),
            mean([r.iters for r in ok]),
            len(ok), len(group) - len(ok),
        ))
    return out


def write_results_csv(path_or_file, rows) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow(r.csv_fields())

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def read_results_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RESULT_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [ResultRow(a, float(s), int(k), int(t), float(e), float(w), int(i), stop)
                for a, s, k, t, e, w, i, stop in reader]


def write_summary_csv(path_or_file, summary) -> None:
    names = [f.name for f in fields(SummaryRow)]

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for s in summary:
            w.writerow([getattr(s, n) if isinstance(getattr(s, n), (str, int)) else format_float(getattr(s, n))
                        for n in names])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


_INT_KEYS = {"nr", "nt", "n_paths", "rank_bound", "n_rf", "n_streams", "n_trials", "master_seed", "nnm_iters"}
_FLOAT_KEYS = {"nnm_mu"}
_SOLVER_KEYS = {"max_iters": int, "stagnation_tol": float, "bisect_tol": float}
_ALIASES = {"snr_db": "snr_db_grid", "k_uses": "k_grid", "d": "rank_bound", "seed": "master_seed",
            "l": "n_paths", "trials": "n_trials"}


def parse_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; lists are comma separated, ``#`` starts a comment.

    Recognized keys are the :class:`ExperimentConfig` fields plus the solver
    settings ``max_iters``, ``stagnation_tol`` and ``bisect_tol``.
    """
    base = base or ExperimentConfig()
    top, solver = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = _ALIASES.get(key.strip().lower(), key.strip().lower())
        value = value.strip()
        items = [v.strip() for v in value.split(",") if v.strip()]
        if key in _INT_KEYS:
            top[key] = int(value)
        elif key in _FLOAT_KEYS:
            top[key] = float(value)
        elif key == "snr_db_grid":
            top[key] = tuple(float(v) for v in items)
        elif key == "k_grid":
            top[key] = tuple(int(v) for v in items)
        elif key == "algorithms":
            top[key] = tuple(v.replace("-", "_").lower() for v in items)
        elif key in _SOLVER_KEYS:
            solver[key] = _SOLVER_KEYS[key](value)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    d = top.get("rank_bound", base.rank_bound)
    solver_cfg = replace(base.solver, d=d, **solver)
    return replace(base, solver=solver_cfg, **top)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())
