"""Dyadic frequency localization, Besov norms, paraproducts and commutators.

The band multipliers phi_j(k) = phi(|k| / 2^j) are built from a C-infinity
bump supported on [3/4, 8/3], normalised so the telescoping sum over dyadic
dilates is exactly 1 away from k = 0.  The low-pass chi at scale j is the
complement 1 - sum_{m >= j} phi_m, so the partition of unity holds on the
lattice to rounding by construction.

Band conventions on the finite lattice:

* j_min = -1 (smallest band whose annulus contains |k| = 1),
* j_max = ceil(log2(k_max / (3/4))); bands above j_max are empty,
* everything below j_min folds into the chi tail (only k = 0 on the
  integer lattice), which the remainder treats as the band j_min - 1 so
  that Bony reconstruction u v = T_u v + T_v u + R(u, v) is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid3, SpectralField, VectorField, require_same_grid
from .operators import (
    derivative,
    lp_norm_physical,
    multiply_fields,
    nonlinear_product,
    require_solenoidal,
    transform_inverse,
    _forward_dealiased,
)

SUPPORT_LO = 3.0 / 4.0
SUPPORT_HI = 8.0 / 3.0
# g ramps up on [3/4, 4/3], is 1 on [4/3, 3/2] and ramps down on [3/2, 8/3];
# the ramp intervals are exactly the overlaps of adjacent dyadic dilates.
_RAMP_LO = 4.0 / 3.0
_RAMP_HI = 3.0 / 2.0


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) based between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    out[mid] = a / (a + b)
    return out


def bump(r: np.ndarray) -> np.ndarray:
    """Smooth radial bump supported on [3/4, 8/3], equal to 1 on [4/3, 3/2]."""
    r = np.asarray(r, dtype=float)
    lo = _smoothstep((r - SUPPORT_LO) / (_RAMP_LO - SUPPORT_LO))
    hi = _smoothstep((SUPPORT_HI - r) / (SUPPORT_HI - _RAMP_HI))
    return lo * hi


@dataclass(frozen=True)
class BesovSpec:
    """Besov space parameters (regularity s, integrability p, summation q)."""

    s: float
    p: float
    q: float
    homogeneous: bool = True

    def __post_init__(self):
        for name, val in (("p", self.p), ("q", self.q)):
            if val != math.inf and val < 1:
                raise ValueError(f"Besov index {name} must be >= 1 or inf, got {val}")


class FilterBank:
    """Precomputed dyadic multipliers realizing the band and low-pass filters.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, grid: Grid3):
        self.grid = grid
        self.j_min = -1
        self.j_max = math.ceil(math.log2(grid.k_max / SUPPORT_LO))
        r = grid.k_abs
        scales = np.arange(self.j_min, self.j_max + 1)
        g_vals = {int(j): bump(r / 2.0**j) for j in scales}
        den = sum(g_vals.values())
        nz = r > 0
        self.phi: dict[int, np.ndarray] = {}
        for j in scales:
            phi_j = np.zeros(grid.shape)
            phi_j[nz] = g_vals[int(j)][nz] / den[nz]
            self.phi[int(j)] = phi_j
        self._chi_cache: dict[int, np.ndarray] = {}
        self.chi = self.chi_at_scale(self.j_min)

    @property
    def bands(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def chi_at_scale(self, j: int) -> np.ndarray:
        """Low-pass multiplier chi(2^-j k) = 1 - sum of bands m >= j."""
        if j < self.j_min:
            raise ValueError(f"low-pass scale {j} below j_min={self.j_min}")
        if j not in self._chi_cache:
            total = np.zeros(self.grid.shape)
            for m in range(j, self.j_max + 1):
                total += self.phi[m]
            chi = 1.0 - total
            chi[self.grid.k_sq == 0] = 1.0
            self._chi_cache[j] = chi
        return self._chi_cache[j]

    def band_support(self, j: int) -> tuple[float, float]:
        return (SUPPORT_LO * 2.0**j, SUPPORT_HI * 2.0**j)

    def partition_residual(self) -> float:
        """max over the lattice of |chi + sum_j phi_j - 1|."""
        total = self.chi.copy()
        for j in self.bands:
            total += self.phi[j]
        return float(np.abs(total - 1.0).max())

    def orthogonality_bounds(self) -> tuple[float, float]:
        """(min, max) over nonzero modes of sum_j phi_j(k)^2."""
        s = sum(p**2 for p in self.phi.values())
        nz = self.grid.k_sq > 0
        return float(s[nz].min()), float(s[nz].max())

    def norm_equivalence_bounds(self, s: float) -> tuple[float, float]:
        """[c1, c2] such that ||f||_{B^s_{2,2}} / ||f||_{H^s homog} is inside.

        Computed from the per-mode weight sum_j 2^(2js) phi_j(k)^2 / |k|^(2s).
        """
        w = np.zeros(self.grid.shape)
        for j in self.bands:
            w += 4.0 ** (j * s) * self.phi[j] ** 2
        nz = self.grid.k_sq > 0
        ratio = w[nz] / self.grid.k_sq[nz] ** s
        return float(np.sqrt(ratio.min())), float(np.sqrt(ratio.max()))

    def info(self) -> dict:
        """Introspection dump used by the CLI bank-info subcommand."""
        r = self.grid.k_abs
        bands = []
        for j in self.bands:
            nzmask = self.phi[j] > 0
            radii = r[nzmask]
            bands.append(
                {
                    "j": j,
                    "support_lo": SUPPORT_LO * 2.0**j,
                    "support_hi": SUPPORT_HI * 2.0**j,
                    "lattice_modes": int(nzmask.sum()),
                    "lattice_radius_min": float(radii.min()) if radii.size else None,
                    "lattice_radius_max": float(radii.max()) if radii.size else None,
                }
            )
        omin, omax = self.orthogonality_bounds()
        return {
            "n": self.grid.n,
            "k_max": self.grid.k_max,
            "j_min": self.j_min,
            "j_max": self.j_max,
            "partition_residual": self.partition_residual(),
            "orthogonality_min": omin,
            "orthogonality_max": omax,
            "bands": bands,
        }


def build_filter_bank(grid: Grid3) -> FilterBank:
    return FilterBank(grid)


# ---------------------------------------------------------------------------
# band operators
# ---------------------------------------------------------------------------

def _apply(f: SpectralField, mult: np.ndarray) -> SpectralField:
    return f.with_coeffs(f.coeffs * mult)


def delta_j(f: SpectralField, j: int, bank: FilterBank) -> SpectralField:
    """Band-pass projection onto the dyadic annulus |k| ~ 2^j."""
    if not bank.j_min <= j <= bank.j_max:
        raise ValueError(f"band index {j} outside [{bank.j_min}, {bank.j_max}]")
    return _apply(f, bank.phi[j])


def s_j(f: SpectralField, j: int, bank: FilterBank) -> SpectralField:
    """Low-pass up to scale 2^j; S_j - S_{j-1} = Delta_{j-1} exactly.

    Scales above j_max are allowed (the multiplier saturates to the
    identity on the lattice); scales below j_min are rejected.
    """
    if j < bank.j_min:
        raise ValueError(f"low-pass scale {j} below j_min={bank.j_min}")
    j = min(j, bank.j_max + 1)
    return _apply(f, bank.chi_at_scale(j))


def delta_j_vector(v: VectorField, j: int, bank: FilterBank) -> VectorField:
    cx, cy, cz = (delta_j(c, j, bank) for c in v.components)
    return VectorField(cx, cy, cz, v.solenoidal)


def band_lp_norms(f: SpectralField, p: float, bank: FilterBank, oversample: int = 1) -> np.ndarray:
    """||Delta_j f||_p for j over the bank's band range."""
    return np.array(
        [lp_norm_physical(delta_j(f, j, bank), p, oversample) for j in bank.bands]
    )


def besov_norm(
    f,
    spec: BesovSpec,
    bank: FilterBank,
    combine: str = "l2",
    oversample: int = 1,
) -> float:
    """Besov norm of a scalar or vector field.

    Vector fields are measured componentwise and combined either as the
    l^2 of component norms (``combine='l2'``, internal default) or as
    their sum (``combine='sum'``, the tuple convention used in monitor
    output).
    """
    if isinstance(f, VectorField):
        norms = [besov_norm(c, spec, bank, oversample=oversample) for c in f.components]
        if combine == "l2":
            return math.sqrt(sum(x**2 for x in norms))
        if combine == "sum":
            return float(sum(norms))
        raise ValueError(f"unknown combine mode {combine!r}")
    if bank.grid.n != f.grid.n:
        raise ValueError("filter bank grid does not match field grid")
    if spec.homogeneous:
        js = list(bank.bands)
    else:
        js = [j for j in bank.bands if j >= 0]
    weights = np.array([2.0 ** (j * spec.s) for j in js])
    norms = np.array([lp_norm_physical(delta_j(f, j, bank), spec.p, oversample) for j in js])
    terms = weights * norms
    if spec.q == math.inf:
        core = float(terms.max()) if terms.size else 0.0
    else:
        core = float(np.sum(terms**spec.q) ** (1.0 / spec.q))
    if spec.homogeneous:
        return core
    s0 = lp_norm_physical(s_j(f, 0, bank), spec.p, oversample)
    return core + s0


# ---------------------------------------------------------------------------
# Bony decomposition
# ---------------------------------------------------------------------------

def _band_physical(f: SpectralField, bank: FilterBank) -> dict[int, np.ndarray]:
    """Physical-space band decomposition, tail stored at index j_min - 1."""
    out = {}
    for j in bank.bands:
        out[j] = transform_inverse(_apply(f, bank.phi[j]))
    out[bank.j_min - 1] = transform_inverse(_apply(f, bank.chi))
    return out


def _lowpass_physical(f: SpectralField, bank: FilterBank) -> dict[int, np.ndarray]:
    """Physical S_{j-1} f for every band j: the tail plus bands up to j - 2."""
    bands = _band_physical(f, bank)
    out = {}
    acc = bands[bank.j_min - 1]
    for j in bank.bands:
        out[j] = acc
        if j - 1 >= bank.j_min:
            acc = acc + bands[j - 1]
    return out


def paraproduct(u: SpectralField, v: SpectralField, bank: FilterBank) -> SpectralField:
    """Bony paraproduct T_u v = sum_j S_{j-1} u Delta_j v, dealiased."""
    grid = require_same_grid(u, v)
    low_u = _lowpass_physical(u, bank)
    bands_v = _band_physical(v, bank)
    acc = np.zeros(grid.shape)
    for j in bank.bands:
        acc += low_u[j] * bands_v[j]
    return SpectralField(grid, _forward_dealiased(acc, grid))


def remainder(u: SpectralField, v: SpectralField, bank: FilterBank) -> SpectralField:
    """Bony remainder R(u, v) = sum_j Delta_j u (Delta_{j-1}+Delta_j+Delta_{j+1}) v.

    Boundary convention on the finite lattice: bands above j_max are zero
    and the chi tail at j_min - 1 enters only through its diagonal
    tail-times-tail product.  Tail-times-band pairs are already carried by
    the paraproducts (the lattice low-pass S_{j-1} always passes the DC
    tail), so this split is exactly what makes the Bony reconstruction
    T_u v + T_v u + R(u, v) = u v exact.
    """
    grid = require_same_grid(u, v)
    bands_u = _band_physical(u, bank)
    bands_v = _band_physical(v, bank)
    zeros = np.zeros(grid.shape)
    tail = bank.j_min - 1
    acc = bands_u[tail] * bands_v[tail]
    for j in bank.bands:
        near = (
            (bands_v[j - 1] if j - 1 >= bank.j_min else zeros)
            + bands_v[j]
            + (bands_v[j + 1] if j + 1 <= bank.j_max else zeros)
        )
        acc += bands_u[j] * near
    return SpectralField(grid, _forward_dealiased(acc, grid))


def paraproduct_prime(u: SpectralField, v: SpectralField, bank: FilterBank) -> SpectralField:
    """T'_u v = T_u v + R(u, v)."""
    out = paraproduct(u, v, bank)
    return out.with_coeffs(out.coeffs + remainder(u, v, bank).coeffs)


# ---------------------------------------------------------------------------
# commutators
# ---------------------------------------------------------------------------

def commutator_advective(f: VectorField, g: VectorField, j: int, bank: FilterBank) -> VectorField:
    """[f, Delta_j] . grad g = f . grad(Delta_j g) - Delta_j(f . grad g)."""
    require_same_grid(f, g)
    require_solenoidal(f, "advecting field")
    gj = delta_j_vector(g, j, bank)
    first = nonlinear_product(f, gj, "advective")
    second = delta_j_vector(nonlinear_product(f, g, "advective"), j, bank)
    return f.with_components(
        first.x.coeffs - second.x.coeffs,
        first.y.coeffs - second.y.coeffs,
        first.z.coeffs - second.z.coeffs,
    )


def commutator_cross(b: VectorField, J: VectorField, j: int, bank: FilterBank) -> VectorField:
    """[b x, Delta_j] J = b x (Delta_j J) - Delta_j(b x J)."""
    require_same_grid(b, J)
    Jj = delta_j_vector(J, j, bank)
    first = nonlinear_product(b, Jj, "cross")
    second = delta_j_vector(nonlinear_product(b, J, "cross"), j, bank)
    return b.with_components(
        first.x.coeffs - second.x.coeffs,
        first.y.coeffs - second.y.coeffs,
        first.z.coeffs - second.z.coeffs,
    )


def commutator_scalar_gradient(f: SpectralField, g: SpectralField, j: int, bank: FilterBank) -> VectorField:
    """[f, Delta_j] grad g = f Delta_j(grad g) - Delta_j(f grad g), scalar f, g."""
    require_same_grid(f, g)
    comps = []
    for axis in range(3):
        h = derivative(g, axis)
        first = multiply_fields(f, delta_j(h, j, bank))
        second = delta_j(multiply_fields(f, h), j, bank)
        comps.append(first.with_coeffs(first.coeffs - second.coeffs))
    return VectorField(*comps)
