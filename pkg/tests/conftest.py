import numpy as np
import pytest

from bwaves.grid import Field, FieldPair, Grid


def band_limited(rng, grid: Grid, modes: int = 12, amplitude: float = 1.0) -> Field:
    """Random real field supported on the lowest Fourier modes."""
    spec = np.zeros(grid.n // 2 + 1, dtype=complex)
    spec[1 : modes + 1] = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    samples = np.fft.irfft(spec, grid.n)
    peak = np.max(np.abs(samples))
    if peak > 0:
        samples *= amplitude / peak
    return Field(grid, samples)


def localized(rng, grid: Grid, modes: int = 10, amplitude: float = 1.0, width: float = None) -> Field:
    """Random smooth field with decaying tails (Gaussian envelope)."""
    base = band_limited(rng, grid, modes, amplitude)
    w = width if width is not None else grid.length / 8.0
    return Field(grid, base.samples * np.exp(-((grid.x / w) ** 2)))


def random_pair(rng, grid: Grid, modes: int = 12, amplitude: float = 1.0) -> FieldPair:
    return FieldPair(
        band_limited(rng, grid, modes, amplitude),
        band_limited(rng, grid, modes, amplitude),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20140803)


@pytest.fixture
def grid128():
    return Grid(128, 20.0)


@pytest.fixture
def grid256():
    return Grid(256, 40.0)
