import numpy as np
import pytest

from mmssd.sounding import generate_codebook


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20161014)


@pytest.fixture
def small_codebook(rng):
    return generate_codebook(4, 6, 2, 9, rng)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
