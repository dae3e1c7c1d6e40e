import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import crandn
from oracles import projected_gradient_ball, real_augmented_lstsq, residual
from mmssd.exceptions import DimensionError, NumericalFailureError, RankDeficiencyError
from mmssd.sounding import SoundingCodebook, affine_map, generate_codebook
from mmssd.subproblems import (
    bisect_lambda,
    build_col_design,
    build_power_design,
    build_row_design,
    solve_power_alloc,
    solve_trace_ball_ls,
    vec,
)


def _factors(rng, cb, d):
    return crandn(rng, cb.nr, d), crandn(rng, cb.nt, d), crandn(rng, d)


# --- design matrices -------------------------------------------------------

def test_col_design_identity(rng):
    cb = generate_codebook(5, 7, 2, 12, rng)
    U, V, lam = _factors(rng, cb, 3)
    B = build_col_design(cb, lam, V)
    assert B.shape == (24, 15)
    lhs = affine_map(cb, (U * lam) @ V.conj().T)
    assert np.linalg.norm(lhs - B @ vec(U)) <= 1e-10 * np.linalg.norm(lhs)


def test_row_design_identity(rng):
    cb = generate_codebook(5, 7, 2, 12, rng)
    U, V, lam = _factors(rng, cb, 3)
    B = build_row_design(cb, U, lam)
    assert B.shape == (24, 21)
    lhs = affine_map(cb, (U * lam) @ V.conj().T)
    assert np.linalg.norm(lhs - B @ vec(V.conj().T)) <= 1e-10 * np.linalg.norm(lhs)


def test_zero_power_gives_zero_col_design(small_codebook, rng):
    _, V, _ = _factors(rng, small_codebook, 2)
    assert not np.any(build_col_design(small_codebook, np.zeros(2), V))


def test_zero_col_basis_gives_zero_row_design(small_codebook, rng):
    assert not np.any(build_row_design(small_codebook, np.zeros((4, 2)), np.ones(2)))


def test_rank_one_single_use_expansion(rng):
    w = crandn(rng, 4, 1)
    f = crandn(rng, 3)
    cb = SoundingCodebook(w[None], f[None])
    u, v, lam = crandn(rng, 4, 1), crandn(rng, 3, 1), crandn(rng, 1)
    s = lam[0] * np.vdot(v[:, 0], f)  # scalar lam v^H f
    B = build_col_design(cb, lam, v)
    np.testing.assert_allclose(B[0], s * w[:, 0].conj(), atol=1e-14)
    m = lam[0] * np.vdot(w[:, 0], u[:, 0])  # scalar w^H u lam
    B = build_row_design(cb, u, lam)
    np.testing.assert_allclose(B[0], f * m, atol=1e-14)


def test_design_dimension_errors(small_codebook):
    with pytest.raises(DimensionError):
        build_col_design(small_codebook, np.ones(2), np.ones((5, 2)))
    with pytest.raises(DimensionError):
        build_row_design(small_codebook, np.ones((4, 2)), np.ones(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_kronecker_identities_hold(seed, d):
    rng = np.random.default_rng(seed)
    cb = generate_codebook(int(rng.integers(d, 8)), int(rng.integers(d, 9)), int(rng.integers(1, 4)),
                           int(rng.integers(1, 10)), rng)
    U, V, lam = _factors(rng, cb, d)
    target = affine_map(cb, (U * lam) @ V.conj().T)
    scale = max(1.0, np.linalg.norm(target))
    assert np.linalg.norm(target - build_col_design(cb, lam, V) @ vec(U)) <= 1e-10 * scale
    assert np.linalg.norm(target - build_row_design(cb, U, lam) @ vec(V.conj().T)) <= 1e-10 * scale
    assert np.linalg.norm(target - build_power_design(cb, U, V) @ lam) <= 1e-10 * scale


# --- bisection ---------------------------------------------------------------

def test_bisect_quadratic_root():
    lam = bisect_lambda(lambda t: 4 / (1 + t) ** 2, 1.0, 1e-10)
    assert abs(lam - 1.0) <= 1e-9


def test_bisect_reciprocal_root():
    lam = bisect_lambda(lambda t: 1 / (1 + t), 0.5, 1e-12)
    assert abs(lam - 1.0) <= 1e-9


def test_bisect_large_root_needs_doubling():
    lam = bisect_lambda(lambda t: 1e6 / (1 + t), 1.0, 1e-9)
    assert abs(1e6 / (1 + lam) - 1.0) <= 1e-9


def test_bisect_ridge_function(rng):
    B = crandn(rng, 12, 12)
    y = crandn(rng, 12)
    s = np.linalg.svd(B, compute_uv=False)
    c2 = np.abs(np.linalg.svd(B)[0].conj().T @ y) ** 2
    g = lambda t: float(np.sum(c2 * s**2 / (s**2 + t) ** 2))
    d = 0.1 * g(0.0)
    lam = bisect_lambda(g, d, 1e-10)
    assert abs(g(lam) - d) <= 1e-10


def test_bisect_no_bracket():
    with pytest.raises(NumericalFailureError):
        bisect_lambda(lambda t: 5.0, 1.0, 1e-9)


# --- trace-ball least squares -----------------------------------------------

def test_identity_design_feasible():
    y = np.array([0.5, 0.5j, 0.0])
    x, lam = solve_trace_ball_ls(np.eye(3), y, 1.0)
    np.testing.assert_allclose(x, y, atol=1e-15)
    assert lam == 0.0


def test_identity_design_active():
    y = np.array([2.0, 0.0, 0.0, 0.0])  # ||y||^2 = 4, g(lam) = 4 / (1 + lam)^2
    x, lam = solve_trace_ball_ls(np.eye(4), y, 1.0, tol=1e-12)
    assert abs(lam - 1.0) <= 1e-9
    np.testing.assert_allclose(x, y / 2, atol=1e-9)
    assert abs(np.linalg.norm(x) ** 2 - 1.0) <= 1e-12


def test_shape_error():
    with pytest.raises(DimensionError):
        solve_trace_ball_ls(np.eye(3), np.ones(4), 1.0)


def test_zero_data_gives_zero():
    x, lam = solve_trace_ball_ls(np.ones((5, 2)), np.zeros(5), 1.0)
    assert not np.any(x) and lam == 0.0


def test_rank_deficient_design_forces_active_constraint(rng):
    B = crandn(rng, 10, 3) @ crandn(rng, 3, 6)  # rank 3, six unknowns
    y = 10 * crandn(rng, 10)
    x, lam = solve_trace_ball_ls(B, y, 0.5, tol=1e-12)
    assert lam > 0
    assert abs(np.linalg.norm(x) ** 2 - 0.5) <= 1e-12
    assert np.all(np.isfinite(x))


def test_rank_deficient_design_min_norm_when_feasible(rng):
    B = crandn(rng, 10, 3) @ crandn(rng, 3, 6)
    x_true = np.linalg.pinv(B) @ crandn(rng, 10)
    y = B @ x_true
    radius = 2 * np.linalg.norm(x_true) ** 2
    x, lam = solve_trace_ball_ls(B, y, radius)
    assert lam == 0.0
    np.testing.assert_allclose(B @ x, y, atol=1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_trace_ball_matches_projected_gradient(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(25, 61)), int(rng.integers(3, 21))
    B, y = crandn(rng, m, n), crandn(rng, m)
    x_ls = np.linalg.lstsq(B, y, rcond=None)[0]
    radius = float(np.linalg.norm(x_ls) ** 2 * rng.uniform(0.05, 1.5))
    x, lam = solve_trace_ball_ls(B, y, radius)
    x_pg = projected_gradient_ball(B, y, radius)
    assert abs(residual(B, y, x) - residual(B, y, x_pg)) <= 1e-8
    assert np.linalg.norm(x) ** 2 <= radius + 1e-9 * radius


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ridge_path_strictly_decreasing(seed):
    rng = np.random.default_rng(seed)
    B, y = crandn(rng, 20, 8), crandn(rng, 20)
    G = B.conj().T @ B
    b = B.conj().T @ y
    grid = np.geomspace(1e-3, 1e3, 25)
    g = [np.linalg.norm(np.linalg.solve(G + t * np.eye(8), b)) ** 2 for t in grid]
    assert np.all(np.diff(g) < 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trace_ball_first_order_optimality(seed):
    rng = np.random.default_rng(seed)
    B, y = crandn(rng, 30, 10), crandn(rng, 30)
    radius = float(rng.uniform(0.05, 2.0))
    x, _ = solve_trace_ball_ls(B, y, radius)
    f0 = residual(B, y, x)
    r = np.sqrt(radius)
    for _ in range(20):
        step = crandn(rng, 10)
        z = x + 1e-3 * step / np.linalg.norm(step)
        if np.linalg.norm(z) > r:
            z *= r / np.linalg.norm(z)
        assert residual(B, y, z) >= f0 - 1e-8


# --- power allocation --------------------------------------------------------

def test_power_single_pair(small_codebook, rng):
    U, V = crandn(rng, 4, 1), crandn(rng, 6, 1)
    y = crandn(rng, 18)
    p = build_power_design(small_codebook, U, V)[:, 0]
    lam = solve_power_alloc(small_codebook, U, V, y)
    np.testing.assert_allclose(lam[0], np.vdot(p, y) / np.vdot(p, p), rtol=1e-12)


def test_power_consistent_system(small_codebook, rng):
    U, V = crandn(rng, 4, 2), crandn(rng, 6, 2)
    y = build_power_design(small_codebook, U, V) @ np.array([2.0, -1.0])
    np.testing.assert_allclose(solve_power_alloc(small_codebook, U, V, y), [2.0, -1.0], atol=1e-12)


def test_power_rank_deficiency_is_reported(small_codebook, rng):
    u, v = crandn(rng, 4, 1), crandn(rng, 6, 1)
    U, V = np.hstack([u, 2 * u]), np.hstack([v, v])
    with pytest.raises(RankDeficiencyError, match="subspace pairs"):
        solve_power_alloc(small_codebook, U, V, crandn(rng, 18))


@pytest.mark.parametrize("seed", range(5))
def test_power_matches_real_augmented_oracle(seed):
    rng = np.random.default_rng(seed)
    cb = generate_codebook(6, 9, 2, 15, rng)
    U, V = crandn(rng, 6, 3), crandn(rng, 9, 3)
    y = crandn(rng, 30)
    lam = solve_power_alloc(cb, U, V, y)
    ref = real_augmented_lstsq(build_power_design(cb, U, V), y)
    assert np.linalg.norm(lam - ref) <= 1e-10 * np.linalg.norm(ref)
