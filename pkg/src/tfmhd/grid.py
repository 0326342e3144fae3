"""Periodic-grid spectral representation of fields on the torus [0, 2*pi)^3.

Fields are stored as full complex Fourier coefficient cubes in standard FFT
ordering, normalised so that ``coeffs[k]`` is the amplitude of ``exp(i k.x)``
(the coefficient of the constant field 1 is 1 at k = 0).  The wavenumber
lattice is the integer cube {-n/2+1, ..., n/2}^3; the Nyquist mode is
labelled +n/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DOMAIN_LENGTH = 2.0 * np.pi


def wavenumbers_1d(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT ordering, Nyquist labelled +n/2."""
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = n // 2
    return k


@dataclass(frozen=True)
class Grid3:
    """Uniform n^3 collocation grid on the 2*pi-periodic box.

    Derived spectral arrays (wavenumbers, |k|^2, dealias mask) are
    precomputed once; the grid is immutable and shareable across threads.
    """

    n: int

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 8, got n={self.n}")
        n = self.n
        k1 = wavenumbers_1d(n)
        kx = k1.reshape(n, 1, 1)
        ky = k1.reshape(1, n, 1)
        kz = k1.reshape(1, 1, n)
        k_sq = kx**2 + ky**2 + kz**2
        # 2/3-rule mask, strict inequality so that aliased images of products
        # of kept modes always land on masked modes (matters when 3 | n).
        cut = (2.0 / 3.0) * (n // 2)
        mask = (np.abs(kx) < cut) & (np.abs(ky) < cut) & (np.abs(kz) < cut)
        object.__setattr__(self, "k1", k1)
        object.__setattr__(self, "kx", kx)
        object.__setattr__(self, "ky", ky)
        object.__setattr__(self, "kz", kz)
        object.__setattr__(self, "k_sq", k_sq)
        object.__setattr__(self, "k_abs", np.sqrt(k_sq))
        object.__setattr__(self, "dealias_mask", mask)

    @property
    def k_max(self) -> int:
        return self.n // 2

    @property
    def cell_volume(self) -> float:
        return (DOMAIN_LENGTH / self.n) ** 3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def axis_points(self) -> np.ndarray:
        """Collocation points along one axis."""
        return np.arange(self.n) * (DOMAIN_LENGTH / self.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical coordinate arrays X, Y, Z with 'ij' indexing."""
        x = self.axis_points()
        return np.meshgrid(x, x, x, indexing="ij")


def hermitize(coeffs: np.ndarray) -> np.ndarray:
    """Project coefficients onto Hermitian symmetry c(-k) = conj(c(k)).

    The projection is the identity on spectra of real fields and makes the
    unpaired Nyquist planes real.  Acts on the trailing three axes, so
    stacked component arrays are handled too.
    """
    flipped = np.roll(coeffs[..., ::-1, ::-1, ::-1], 1, axis=(-3, -2, -1))
    return 0.5 * (coeffs + np.conj(flipped))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex Fourier coefficients of a scalar field on a Grid3.

    Treat instances as immutable values: operations return new fields and
    never write into ``coeffs``.
    """

    grid: Grid3
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    @classmethod
    def zero(cls, grid: Grid3) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Triple of SpectralField components on a shared grid."""

    x: SpectralField
    y: SpectralField
    z: SpectralField
    solenoidal: bool = False

    def __post_init__(self):
        if not (self.x.grid is self.y.grid is self.z.grid or self.x.grid == self.y.grid == self.z.grid):
            raise ValueError("vector components live on different grids")

    @property
    def grid(self) -> Grid3:
        return self.x.grid

    @property
    def components(self) -> tuple[SpectralField, SpectralField, SpectralField]:
        return (self.x, self.y, self.z)

    def with_components(self, cx, cy, cz, solenoidal: bool = False) -> "VectorField":
        g = self.grid
        return VectorField(SpectralField(g, cx), SpectralField(g, cy), SpectralField(g, cz), solenoidal)

    @classmethod
    def zero(cls, grid: Grid3, solenoidal: bool = True) -> "VectorField":
        return cls(SpectralField.zero(grid), SpectralField.zero(grid), SpectralField.zero(grid), solenoidal)


def require_same_grid(*fields) -> Grid3:
    grids = {f.grid.n for f in fields}
    if len(grids) != 1:
        raise ValueError(f"fields live on different grids: n in {sorted(grids)}")
    return fields[0].grid
