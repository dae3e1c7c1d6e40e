"""Command line entry point: ``mmssd {bench,simulate,estimate,trace}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .baselines import mf_estimate
from .bench import (
    ExperimentConfig,
    aggregate,
    load_config,
    run_experiment,
    snr_to_noise_var,
    trial_streams,
    write_results_csv,
    write_summary_csv,
)
from .channel import generate_channel
from .metrics import nmse
from .sounding import generate_codebook, sound_channel
from .ssd import SolverConfig, extract_precoder, ssd_estimate, ssd_t_estimate

log = logging.getLogger("mmssd")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def cmd_bench(args):
    cfg = _config(args)
    log.info("running %d cells x %d algorithms",
             len(cfg.snr_db_grid) * len(cfg.k_grid) * cfg.n_trials, len(cfg.algorithms))
    rows = run_experiment(cfg, threads=args.threads)
    if args.out:
        write_results_csv(args.out, rows)
    else:
        write_results_csv(sys.stdout, rows)
    summary = aggregate(rows)
    if args.summary:
        write_summary_csv(args.summary, summary)
    for s in summary:
        log.info("%-8s snr=%6.1f dB K=%4d  nmse=%.4g  time=%.3gs  iters=%.1f  failures=%d",
                 s.algorithm, s.snr_db, s.k_uses, s.mean_nmse, s.mean_wall_time_s, s.mean_iters, s.failures)
    return 0


def _instance(cfg, snr_db, k_uses, seed):
    s_chan, s_code, s_noise, s_init = trial_streams(seed, 0, 0, 0)
    channel = generate_channel(cfg.nr, cfg.nt, cfg.n_paths, np.random.default_rng(s_chan))
    codebook = generate_codebook(cfg.nr, cfg.nt, cfg.n_rf, k_uses, np.random.default_rng(s_code))
    y = sound_channel(channel, codebook, snr_to_noise_var(snr_db), np.random.default_rng(s_noise))
    return channel, codebook, y, s_init


def cmd_simulate(args):
    cfg = _config(args)
    snr_db = args.snr_db if args.snr_db is not None else cfg.snr_db_grid[0]
    k_uses = args.k_uses if args.k_uses is not None else cfg.k_grid[0]
    channel, codebook, y, _ = _instance(cfg, snr_db, k_uses, cfg.master_seed)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_matrix_csv(out / "channel.csv", channel.entries)
    io.write_paths_csv(out / "paths.csv", channel.paths)
    io.write_codebook_csv(out / "codebook.csv", codebook)
    io.write_samples_csv(out / "samples.csv", y)
    log.info("wrote channel, paths, codebook and samples to %s", out)
    return 0


def _estimate(alg, y, codebook, solver, seed, h_true=None):
    rng = np.random.default_rng(seed)
    if alg == "ssd":
        H, dec, tr = ssd_estimate(y, codebook, solver, rng, h_true=h_true)
    elif alg == "ssd-t":
        H, dec, tr = ssd_t_estimate(y, codebook, solver, rng, h_true=h_true)
    else:
        H, tr = mf_estimate(y, codebook, solver.d, solver, rng, h_true=h_true)
        dec = None
    return H, dec, tr


def cmd_estimate(args):
    codebook = io.read_codebook_csv(args.codebook)
    y = io.read_samples_csv(args.samples, noise_var=args.noise_var)
    solver = SolverConfig(d=args.rank_bound, max_iters=args.max_iters, noise_var=y.noise_var)
    h_true = io.read_matrix_csv(args.channel) if args.channel else None
    H, dec, tr = _estimate(args.alg, y, codebook, solver, args.seed, h_true)
    io.write_matrix_csv(args.out, H)
    if args.trace:
        io.write_trace_csv(args.trace, tr)
    if args.streams:
        if dec is None:
            raise SystemExit("--streams needs a decomposition (ssd or ssd-t)")
        W, F = extract_precoder(dec, args.streams)
        stem = Path(args.out)
        io.write_matrix_csv(stem.with_name(stem.stem + "_combiner.csv"), W)
        io.write_matrix_csv(stem.with_name(stem.stem + "_precoder.csv"), F)
    msg = f"{args.alg}: {tr.n_iters} iterations, stop={tr.stop_reason}"
    if h_true is not None:
        msg += f", nmse={nmse(h_true, H):.4g}"
    log.info(msg)
    return 0


def cmd_trace(args):
    cfg = _config(args)
    snr_db = args.snr_db if args.snr_db is not None else cfg.snr_db_grid[0]
    k_uses = args.k_uses if args.k_uses is not None else cfg.k_grid[0]
    channel, codebook, y, s_init = _instance(cfg, snr_db, k_uses, cfg.master_seed)
    solver = replace(cfg.solver, noise_var=y.noise_var)
    _, _, tr = _estimate(args.alg, y, codebook, solver, s_init, channel.entries)
    io.write_trace_csv(args.out or sys.stdout, tr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmssd", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run a Monte-Carlo sweep from a config file")
    b.add_argument("--config", help="key = value config file")
    b.add_argument("--out", help="result CSV (default: stdout)")
    b.add_argument("--summary", help="also write aggregated means to this CSV")
    b.add_argument("--seed", type=int, help="override master_seed")
    b.add_argument("--threads", type=int, default=1)
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("simulate", help="write one channel, codebook and sample set")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--snr-db", type=float)
    s.add_argument("--k-uses", type=int)
    s.add_argument("--outdir", required=True)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate a channel from serialized samples")
    e.add_argument("--codebook", required=True)
    e.add_argument("--samples", required=True)
    e.add_argument("--alg", choices=["ssd", "ssd-t", "mf"], default="ssd")
    e.add_argument("--rank-bound", type=int, default=3)
    e.add_argument("--max-iters", type=int, default=30)
    e.add_argument("--noise-var", type=float, help="override the sample sidecar")
    e.add_argument("--seed", type=int, default=0, help="initialization seed")
    e.add_argument("--channel", help="true channel CSV, enables nmse reporting")
    e.add_argument("--trace", help="write the per-iteration trace here")
    e.add_argument("--streams", type=int, help="also write combiner/precoder with this many streams")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("trace", help="per-iteration objective and NMSE of one instance")
    t.add_argument("--config")
    t.add_argument("--seed", type=int)
    t.add_argument("--snr-db", type=float)
    t.add_argument("--k-uses", type=int)
    t.add_argument("--alg", choices=["ssd", "ssd-t", "mf"], default="ssd")
    t.add_argument("--out", help="trace CSV (default: stdout)")
    t.set_defaults(func=cmd_trace)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
