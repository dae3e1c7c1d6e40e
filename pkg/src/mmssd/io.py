"""Flat-file formats for channels, codebooks, samples, traces and results.

Floats are written with ``repr`` so that every value round-trips exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .channel import PathParams
from .exceptions import DimensionError
from .sounding import SampleVector, SoundingCodebook

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_paths_csv",
    "read_paths_csv",
    "write_codebook_csv",
    "read_codebook_csv",
    "write_samples_csv",
    "read_samples_csv",
    "write_trace_csv",
    "sidecar_path",
]

MATRIX_HEADER = ["row", "col", "re", "im"]
PATHS_HEADER = ["l", "gain_re", "gain_im", "aod_rad", "aoa_rad"]
CODEBOOK_HEADER = ["k", "kind", "row", "col", "re", "im"]
SAMPLES_HEADER = ["idx", "re", "im"]
TRACE_HEADER = ["iter", "objective", "nmse", "stop_reason"]


def _f(x) -> str:
    return repr(float(x))


def _reader(path, header):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise ValueError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def _writer(path, header, rows):
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    if hasattr(path, "write"):
        emit(path)
    else:
        with open(path, "w", newline="") as fh:
            emit(fh)


def write_matrix_csv(path, X) -> None:
    """Row-major ``row,col,re,im`` export of a complex matrix."""
    X = np.asarray(X)
    _writer(path, MATRIX_HEADER, (
        (i, j, _f(X[i, j].real), _f(X[i, j].imag)) for i in range(X.shape[0]) for j in range(X.shape[1])
    ))


def read_matrix_csv(path) -> np.ndarray:
    rows = _reader(path, MATRIX_HEADER)
    idx = np.array([(int(r[0]), int(r[1])) for r in rows])
    if idx.size == 0:
        raise ValueError(f"{path}: empty matrix")
    X = np.zeros(tuple(idx.max(axis=0) + 1), dtype=complex)
    for (i, j), r in zip(idx, rows):
        X[i, j] = complex(float(r[2]), float(r[3]))
    return X


def write_paths_csv(path, paths) -> None:
    _writer(path, PATHS_HEADER, (
        (l, _f(p.gain.real), _f(p.gain.imag), _f(p.aod), _f(p.aoa)) for l, p in enumerate(paths)
    ))


def read_paths_csv(path):
    rows = _reader(path, PATHS_HEADER)
    return [PathParams(complex(float(r[1]), float(r[2])), float(r[3]), float(r[4])) for r in rows]


def write_codebook_csv(path, codebook: SoundingCodebook) -> None:
    """One line per entry: ``k,W,row,col,re,im`` for combiners, ``k,f,row,0,re,im`` for precoders."""
    def rows():
        W, F = codebook.combiners, codebook.precoders
        for k in range(codebook.k_uses):
            for i in range(codebook.nr):
                for j in range(codebook.n_rf):
                    yield k, "W", i, j, _f(W[k, i, j].real), _f(W[k, i, j].imag)
            for t in range(codebook.nt):
                yield k, "f", t, 0, _f(F[k, t].real), _f(F[k, t].imag)

    _writer(path, CODEBOOK_HEADER, rows())


def read_codebook_csv(path) -> SoundingCodebook:
    rows = _reader(path, CODEBOOK_HEADER)
    w_entries, f_entries = [], []
    for r in rows:
        k, kind, i, j = int(r[0]), r[1], int(r[2]), int(r[3])
        value = complex(float(r[4]), float(r[5]))
        if kind == "W":
            w_entries.append((k, i, j, value))
        elif kind == "f":
            f_entries.append((k, i, value))
        else:
            raise ValueError(f"{path}: unknown entry kind {kind!r}")
    if not w_entries or not f_entries:
        raise ValueError(f"{path}: codebook needs both W and f entries")
    shape_w = tuple(max(e[a] for e in w_entries) + 1 for a in range(3))
    shape_f = tuple(max(e[a] for e in f_entries) + 1 for a in range(2))
    if shape_w[0] != shape_f[0]:
        raise DimensionError(f"{path}: {shape_w[0]} combiners but {shape_f[0]} precoders")
    W = np.zeros(shape_w, dtype=complex)
    F = np.zeros(shape_f, dtype=complex)
    for k, i, j, v in w_entries:
        W[k, i, j] = v
    for k, t, v in f_entries:
        F[k, t] = v
    return SoundingCodebook(W, F)


def sidecar_path(path) -> Path:
    """Location of the ``noise_var=<value>`` line accompanying a sample CSV."""
    path = Path(path)
    return path.with_name(path.name + ".meta")


def write_samples_csv(path, samples: SampleVector) -> None:
    v = samples.values
    _writer(path, SAMPLES_HEADER, ((i, _f(x.real), _f(x.imag)) for i, x in enumerate(v)))
    sidecar_path(path).write_text(f"noise_var={_f(samples.noise_var)}\n")


def read_samples_csv(path, noise_var=None) -> SampleVector:
    """Load samples; the noise variance comes from the sidecar unless given."""
    rows = _reader(path, SAMPLES_HEADER)
    values = np.zeros(len(rows), dtype=complex)
    for r in rows:
        values[int(r[0])] = complex(float(r[1]), float(r[2]))
    if noise_var is None:
        meta = sidecar_path(path)
        noise_var = 0.0
        if meta.exists():
            for line in meta.read_text().splitlines():
                key, _, val = line.partition("=")
                if key.strip() == "noise_var":
                    noise_var = float(val)
    return SampleVector(values, noise_var)


def write_trace_csv(path, trace) -> None:
    """``iter,objective,nmse,stop_reason``; nmse is blank without a reference
    channel and the stop reason is written on the last row only."""
    n = trace.n_iters

    def rows():
        for i, obj in enumerate(trace.objective):
            err = _f(trace.nmse[i]) if i < len(trace.nmse) else ""
            stop = str(trace.stop_reason) if i == n - 1 and trace.stop_reason is not None else ""
            yield i + 1, _f(obj), err, stop

    _writer(path, TRACE_HEADER, rows())


def format_float(x) -> str:
    """``repr`` of a float, with ``nan`` for missing values."""
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)
