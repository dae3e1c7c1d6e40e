import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmssd.channel import (
    ChannelMatrix,
    PathParams,
    channel_from_paths,
    generate_channel,
    numerical_rank,
    ula_response,
)
from mmssd.exceptions import DimensionError


def test_ula_broadside_is_flat():
    np.testing.assert_allclose(ula_response(4, 0.0), 0.5 * np.ones(4), atol=1e-15)


def test_ula_endfire_alternates():
    np.testing.assert_allclose(ula_response(2, np.pi / 2), np.array([1, -1]) / np.sqrt(2), atol=1e-15)


def test_ula_thirty_degrees():
    # sin(pi/6) = 1/2, so the phase advances by pi/2 per element
    expected = np.array([1, 1j, -1]) / np.sqrt(3)
    np.testing.assert_allclose(ula_response(3, np.pi / 6), expected, atol=1e-15)


def test_ula_rejects_empty_array():
    with pytest.raises(DimensionError):
        ula_response(0, 0.1)


@given(st.integers(1, 256), st.floats(-np.pi / 2, np.pi / 2, allow_nan=False))
def test_ula_unit_norm(n, angle):
    assert abs(np.linalg.norm(ula_response(n, angle)) - 1.0) <= 1e-14


def test_single_zero_angle_path_is_all_ones():
    ch = channel_from_paths(2, 2, [PathParams(1.0 + 0j, 0.0, 0.0)])
    np.testing.assert_allclose(ch.entries, np.ones((2, 2)), atol=1e-15)


def test_generate_channel_shape_and_rank():
    ch = generate_channel(16, 64, 2, 5)
    assert isinstance(ch, ChannelMatrix)
    assert ch.entries.shape == (16, 64)
    assert (ch.nr, ch.nt, ch.n_paths) == (16, 64, 2)
    assert numerical_rank(ch.entries) <= 2


def test_paths_reproduce_entries():
    ch = generate_channel(8, 12, 3, 11)
    again = channel_from_paths(8, 12, ch.paths)
    err = np.linalg.norm(again.entries - ch.entries) / np.linalg.norm(ch.entries)
    assert err <= 1e-12


def test_angles_normalized():
    ch = generate_channel(8, 8, 4, 3)
    for p in ch.paths:
        assert -np.pi / 2 <= p.aod < np.pi / 2
        assert -np.pi / 2 <= p.aoa < np.pi / 2


def test_same_seed_same_paths():
    a = generate_channel(8, 16, 2, 99)
    b = generate_channel(8, 16, 2, 99)
    assert a.paths == b.paths
    assert np.array_equal(a.entries, b.entries)


@pytest.mark.parametrize("n_paths", [0, 9])
def test_invalid_path_count(n_paths):
    with pytest.raises(DimensionError):
        generate_channel(8, 16, n_paths, 0)


def test_mean_frobenius_energy():
    rng = np.random.default_rng(1)
    energy = [np.linalg.norm(generate_channel(4, 8, 2, rng).entries) ** 2 / 32 for _ in range(10_000)]
    assert abs(np.mean(energy) - 1.0) <= 0.05


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_rank_never_exceeds_paths(n_paths, seed):
    ch = generate_channel(12, 20, n_paths, seed)
    assert numerical_rank(ch.entries) <= n_paths
