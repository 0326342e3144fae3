"""Shared fixtures and random-field helpers for the test suite."""

import numpy as np
import pytest

from tfmhd.grid import Grid3, SpectralField, VectorField, hermitize
from tfmhd.littlewood_paley import FilterBank
from tfmhd.operators import project_leray, transform_forward

_BANKS: dict[int, FilterBank] = {}


def get_bank(n: int) -> FilterBank:
    """Filter banks are expensive enough to share across tests."""
    if n not in _BANKS:
        _BANKS[n] = FilterBank(Grid3(n))
    return _BANKS[n]


@pytest.fixture(scope="session")
def grid16():
    return Grid3(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid3(32)


@pytest.fixture(scope="session")
def bank16(grid16):
    return get_bank(16)


@pytest.fixture(scope="session")
def bank32(grid32):
    return get_bank(32)


def random_physical(grid: Grid3, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(grid.shape)


def random_field(grid: Grid3, seed: int, slope: float = -2.0, kcut: float | None = None) -> SpectralField:
    """Random smooth real-valued field with power-law spectral decay."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    amp = np.where(grid.k_sq > 0, np.sqrt(np.where(grid.k_sq > 0, grid.k_sq, 1.0)) ** slope, 0.0)
    c *= amp
    if kcut is not None:
        c[grid.k_abs > kcut] = 0.0
    c = np.where(grid.dealias_mask, c, 0.0)
    return SpectralField(grid, hermitize(c))


def random_vector(grid: Grid3, seed: int, slope: float = -2.0, kcut: float | None = None) -> VectorField:
    return VectorField(
        random_field(grid, seed, slope, kcut),
        random_field(grid, seed + 1, slope, kcut),
        random_field(grid, seed + 2, slope, kcut),
    )


def random_solenoidal(grid: Grid3, seed: int, slope: float = -2.0, kcut: float | None = None) -> VectorField:
    return project_leray(random_vector(grid, seed, slope, kcut))


def single_mode_field(grid: Grid3, k: tuple[int, int, int], amplitude: float = 1.0) -> SpectralField:
    """Real field amplitude * cos(k . x) as a spectral field."""
    X, Y, Z = grid.mesh()
    vals = amplitude * np.cos(k[0] * X + k[1] * Y + k[2] * Z)
    return transform_forward(vals, grid)
