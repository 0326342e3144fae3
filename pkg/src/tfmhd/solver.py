"""Time evolution of the periodic-box two-fluid MHD system.

Momentum equation in rotational form with all gradients absorbed by the
Leray projection; induction equation in curl form with the electron
inertia operator (1 - alpha Laplacian) inverted exactly as the Fourier
multiplier 1 / (1 + alpha |k|^2):

    du = nu Lap u + P(-omega x u + J x b)
    db = (1 - alpha Lap)^-1 [eta Lap b + curl(u x b) - hall curl(J x b)]

Two steppers are provided: classical RK4 on the integrating-factor
transformed system (exact on the linear part) and Crank-Nicolson /
Adams-Bashforth-2 IMEX.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as _fft

from .grid import DOMAIN_LENGTH, Grid3, SpectralField, VectorField, hermitize
from .operators import (
    l2_norm,
    project_leray,
    require_solenoidal,
    sobolev_norm,
    transform_forward,
)

SCHEMES = ("rk4_integrating_factor", "imex_cnab2")


@dataclass(frozen=True)
class PhysParams:
    """Viscosity, resistivity, electron inertia and Hall coefficients."""

    nu: float = 0.0
    eta: float = 0.0
    alpha: float = 0.0
    hall: float = 0.0

    def __post_init__(self):
        for name in ("nu", "eta", "alpha", "hall"):
            val = getattr(self, name)
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"parameter {name} must be finite and >= 0, got {val}")


@dataclass(frozen=True, eq=False)
class SolverState:
    """Velocity and magnetic field at time t, plus physical parameters."""

    u: VectorField
    b: VectorField
    t: float
    params: PhysParams

    @property
    def grid(self) -> Grid3:
        return self.u.grid


def make_state(u: VectorField, b: VectorField, params: PhysParams, t: float = 0.0) -> SolverState:
    require_solenoidal(u, "velocity", tol=1e-10)
    require_solenoidal(b, "magnetic field", tol=1e-10)
    return SolverState(u, b, t, params)


def modified_energy_l2(state: SolverState) -> float:
    """||u||_2^2 + ||b||_2^2 + alpha ||grad b||_2^2, the dissipated energy."""
    grad_b_sq = sobolev_norm(state.b, 1.0, homogeneous=True) ** 2
    return l2_norm(state.u) ** 2 + l2_norm(state.b) ** 2 + state.params.alpha * grad_b_sq


def energy_functional(state: SolverState, s: float) -> dict:
    """L^2 and H^s modified energies (sum convention over the field tuple)."""
    if s < 0:
        raise ValueError(f"regularity s must be >= 0, got {s}")
    alpha = state.params.alpha
    hs_part = sobolev_norm(state.u, s) ** 2 + sobolev_norm(state.b, s) ** 2
    gb_sq = _grad_hs_sq(state.b, s)
    return {
        "l2_part": modified_energy_l2(state),
        "hs_part": hs_part,
        "modified_total": hs_part + alpha * gb_sq,
    }


def _grad_hs_sq(v: VectorField, s: float) -> float:
    """||grad v||_{H^s}^2 via the |k|^2 (1 + |k|^2)^s multiplier."""
    g = v.grid
    w = g.k_sq * (1.0 + g.k_sq) ** s
    vol = DOMAIN_LENGTH**3
    return float(sum(vol * np.sum(w * np.abs(c.coeffs) ** 2) for c in v.components))


def helmholtz_invert(f: VectorField, alpha: float) -> VectorField:
    """Apply (1 - alpha Laplacian)^-1, the exact electron-inertia multiplier."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    mult = 1.0 / (1.0 + alpha * f.grid.k_sq)
    return f.with_components(
        f.x.coeffs * mult, f.y.coeffs * mult, f.z.coeffs * mult, f.solenoidal
    )


# ---------------------------------------------------------------------------
# right-hand side on raw coefficient stacks
# ---------------------------------------------------------------------------

class _Workspace:
    """Precomputed multipliers and array-level kernels for one grid."""

    def __init__(self, grid: Grid3, params: PhysParams):
        self.grid = grid
        self.params = params
        n = grid.n
        self.n3 = n**3
        self.mask = grid.dealias_mask
        self.helm = 1.0 / (1.0 + params.alpha * grid.k_sq)
        self.lin_u = -params.nu * grid.k_sq
        self.lin_b = -params.eta * grid.k_sq * self.helm
        self.kvec = (grid.kx, grid.ky, grid.kz)
        self.inv_ksq = np.where(grid.k_sq > 0, 1.0 / np.where(grid.k_sq > 0, grid.k_sq, 1.0), 0.0)
        # derivative multipliers with the Nyquist mode zeroed per axis
        self.ik = []
        for axis, k in enumerate(self.kvec):
            kk = k.astype(float).copy()
            sl = [slice(None)] * 3
            sl[axis] = n // 2
            kk[tuple(sl)] = 0.0
            self.ik.append(1j * kk)

    def ifft(self, c: np.ndarray) -> np.ndarray:
        return _fft.ifftn(c * self.n3).real

    def fwd(self, arr: np.ndarray) -> np.ndarray:
        c = _fft.fftn(arr) / self.n3
        return np.where(self.mask, hermitize(c), 0.0)

    def curl_spec(self, cx, cy, cz):
        dx, dy, dz = self.ik
        return (dy * cz - dz * cy, dz * cx - dx * cz, dx * cy - dy * cx)

    def leray(self, cx, cy, cz):
        kx, ky, kz = self.kvec
        s = (kx * cx + ky * cy + kz * cz) * self.inv_ksq
        return (cx - kx * s, cy - ky * s, cz - kz * s)

    def nonlinear(self, Y: np.ndarray) -> tuple[np.ndarray, float, float]:
        """Projected nonlinear tendencies and max pointwise |u|, |b|."""
        up = [self.ifft(c) for c in Y[:3]]
        bp = [self.ifft(c) for c in Y[3:]]
        om = [self.ifft(c) for c in self.curl_spec(*Y[:3])]
        Jp = [self.ifft(c) for c in self.curl_spec(*Y[3:])]

        def cross(a, b):
            return (
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            )

        jxb = cross(Jp, bp)
        oxu = cross(om, up)
        uxb = cross(up, bp)
        h = self.params.hall
        m = [self.fwd(jxb[i] - oxu[i]) for i in range(3)]
        w = [self.fwd(uxb[i] - h * jxb[i]) for i in range(3)]
        nu_terms = self.leray(*m)
        nb_terms = [self.helm * c for c in self.curl_spec(*w)]
        out = np.stack([*nu_terms, *nb_terms])
        maxu = float(np.sqrt(up[0] ** 2 + up[1] ** 2 + up[2] ** 2).max())
        maxb = float(np.sqrt(bp[0] ** 2 + bp[1] ** 2 + bp[2] ** 2).max())
        return out, maxu, maxb

    def enforce(self, Y: np.ndarray) -> np.ndarray:
        """Re-project u onto divergence-free fields and restore symmetry."""
        Y = hermitize(Y)
        Y[:3] = np.stack(self.leray(*Y[:3]))
        return Y


def _pack(state: SolverState) -> np.ndarray:
    return np.stack([c.coeffs for c in (*state.u.components, *state.b.components)])


def _unpack(Y: np.ndarray, grid: Grid3, params: PhysParams, t: float) -> SolverState:
    u = VectorField(*(SpectralField(grid, Y[i].copy()) for i in range(3)), solenoidal=True)
    b = VectorField(*(SpectralField(grid, Y[i].copy()) for i in range(3, 6)), solenoidal=True)
    return SolverState(u, b, t, params)


def rhs(state: SolverState) -> tuple[VectorField, VectorField]:
    """Full tendencies (du, db) of the evolution equations at a state."""
    ws = _Workspace(state.grid, state.params)
    Y = _pack(state)
    N, _, _ = ws.nonlinear(Y)
    N[:3] += ws.lin_u * Y[:3]
    N[3:] += ws.lin_b * Y[3:]
    if not np.all(np.isfinite(N)):
        raise FloatingPointError("non-finite values in the right-hand side (blow-up)")
    du = VectorField(*(SpectralField(state.grid, N[i]) for i in range(3)), solenoidal=True)
    db = VectorField(*(SpectralField(state.grid, N[i]) for i in range(3, 6)), solenoidal=True)
    return du, db


# ---------------------------------------------------------------------------
# time steppers
# ---------------------------------------------------------------------------

@dataclass
class StepDiagnostics:
    max_u: float = 0.0
    max_b: float = 0.0
    cfl: float = 0.0
    whistler_dt: float = math.inf


class Stepper:
    """Advances a coefficient stack in time; owns scheme state (AB history).

    ``nonlinear`` may be replaced by an arbitrary ``f(Y, t) -> stack``
    closure (zero for purely linear runs, frozen interpolated forcing for
    the successive-approximation mode).
    """

    def __init__(
        self,
        grid: Grid3,
        params: PhysParams,
        dt: float,
        scheme: str = "rk4_integrating_factor",
        nonlinear: str | None = "mhd",
        cfl_limit: float = 0.5,
        whistler_safety: float = 0.25,
    ):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; options: {SCHEMES}")
        self.grid = grid
        self.params = params
        self.dt = dt
        self.scheme = scheme
        self.cfl_limit = cfl_limit
        self.whistler_safety = whistler_safety
        self.ws = _Workspace(grid, params)
        if nonlinear == "mhd":
            self._nl = lambda Y, t: self.ws.nonlinear(Y)
        elif nonlinear is None:
            zero = lambda Y, t: (np.zeros_like(Y), 0.0, 0.0)  # noqa: E731
            self._nl = zero
        else:
            self._nl = nonlinear
        lu, lb = self.ws.lin_u, self.ws.lin_b
        self._e_u, self._e_b = np.exp(dt * lu), np.exp(dt * lb)
        self._e2_u, self._e2_b = np.exp(0.5 * dt * lu), np.exp(0.5 * dt * lb)
        # Crank-Nicolson factors
        self._cn_num_u = 1.0 + 0.5 * dt * lu
        self._cn_num_b = 1.0 + 0.5 * dt * lb
        self._cn_den_u = 1.0 / (1.0 - 0.5 * dt * lu)
        self._cn_den_b = 1.0 / (1.0 - 0.5 * dt * lb)
        self._prev_nl: np.ndarray | None = None

    def _scale(self, Y, mu, mb):
        out = np.empty_like(Y)
        out[:3] = Y[:3] * mu
        out[3:] = Y[3:] * mb
        return out

    def step(self, Y: np.ndarray, t: float) -> tuple[np.ndarray, StepDiagnostics]:
        dt = self.dt
        if self.scheme == "rk4_integrating_factor" or self._prev_nl is None:
            k1, maxu, maxb = self._nl(Y, t)
            e_y = self._scale(Y, self._e_u, self._e_b)
            e2_y = self._scale(Y, self._e2_u, self._e2_b)
            k2, _, _ = self._nl(self._scale(Y + 0.5 * dt * k1, self._e2_u, self._e2_b), t + 0.5 * dt)
            k3, _, _ = self._nl(e2_y + 0.5 * dt * k2, t + 0.5 * dt)
            k4, _, _ = self._nl(e_y + dt * self._scale(k3, self._e2_u, self._e2_b), t + dt)
            out = e_y + (dt / 6.0) * (
                self._scale(k1, self._e_u, self._e_b)
                + 2.0 * self._scale(k2 + k3, self._e2_u, self._e2_b)
                + k4
            )
            if self.scheme == "imex_cnab2":
                self._prev_nl = k1
        else:
            k1, maxu, maxb = self._nl(Y, t)
            expl = 1.5 * k1 - 0.5 * self._prev_nl
            out = np.empty_like(Y)
            out[:3] = (self._cn_num_u * Y[:3] + dt * expl[:3]) * self._cn_den_u
            out[3:] = (self._cn_num_b * Y[3:] + dt * expl[3:]) * self._cn_den_b
            self._prev_nl = k1
        out = self.ws.enforce(out)
        diag = StepDiagnostics(max_u=maxu, max_b=maxb)
        diag.cfl = dt * maxu * self.grid.n / DOMAIN_LENGTH
        h, kmax = self.params.hall, self.grid.k_max
        if h > 0 and maxb > 0:
            diag.whistler_dt = self.whistler_safety / (h * kmax**2 * maxb)
        return out, diag


def step(state: SolverState, dt: float, scheme: str = "rk4_integrating_factor") -> SolverState:
    """Advance one step (stateless convenience wrapper around Stepper)."""
    stepper = Stepper(state.grid, state.params, dt, scheme)
    Y, _ = stepper.step(_pack(state), state.t)
    if not np.all(np.isfinite(Y)):
        raise FloatingPointError("non-finite state after step (blow-up)")
    return _unpack(Y, state.grid, state.params, state.t + dt)


# ---------------------------------------------------------------------------
# run driver
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    final: SolverState
    records: list
    blown_up: bool = False
    warnings: list = field(default_factory=list)


def run(
    initial: SolverState,
    t_end: float,
    dt: float,
    scheme: str = "rk4_integrating_factor",
    monitor=None,
    checkpoint_every: int = 0,
    checkpoint_writer=None,
    cfl_limit: float = 0.5,
    whistler_safety: float = 0.25,
    linear_only: bool = False,
    energy_growth_limit: float = 1e12,
) -> RunResult:
    """Step to t_end, sampling the monitor and writing checkpoints.

    On NaN or runaway energy growth the run halts with the last valid
    state preserved and ``blown_up`` set.
    """
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    n_steps = int(round(t_end / dt)) if t_end > 0 else 0
    warnings: list[str] = []
    if n_steps > 0 and abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        warnings.append(f"t_end adjusted to {n_steps * dt:.12g} (nearest multiple of dt)")
    if n_steps == 0:
        return RunResult(initial, [], False, warnings)

    stepper = Stepper(
        initial.grid,
        initial.params,
        dt,
        scheme,
        nonlinear=None if linear_only else "mhd",
        cfl_limit=cfl_limit,
        whistler_safety=whistler_safety,
    )
    Y = _pack(initial)
    t = initial.t
    e0 = max(modified_energy_l2(initial), 1e-300)
    state = initial
    blown_up = False
    cfl_hits = 0
    whistler_hits = 0

    def snapshot(Yc, tc):
        return _unpack(Yc, initial.grid, initial.params, tc)

    if monitor is not None:
        monitor.observe(state)
    if checkpoint_writer is not None:
        checkpoint_writer(state, 0)

    for istep in range(1, n_steps + 1):
        Y_new, diag = stepper.step(Y, t)
        if diag.cfl > cfl_limit:
            cfl_hits += 1
            if cfl_hits == 1:
                warnings.append(
                    f"CFL number {diag.cfl:.3f} exceeds limit {cfl_limit} at step {istep}"
                )
        if dt > diag.whistler_dt:
            whistler_hits += 1
            if whistler_hits == 1:
                warnings.append(
                    f"dt={dt:g} exceeds whistler limit {diag.whistler_dt:.3e} at step {istep}"
                )
        t_new = initial.t + istep * dt
        new_state = snapshot(Y_new, t_new)
        if not np.all(np.isfinite(Y_new)) or modified_energy_l2(new_state) > energy_growth_limit * e0:
            warnings.append(f"blow-up detected at step {istep} (t={t_new:.6g}); halting")
            blown_up = True
            break
        Y, t, state = Y_new, t_new, new_state
        if monitor is not None and (istep % monitor.every == 0 or istep == n_steps):
            monitor.observe(state)
        if checkpoint_writer is not None and checkpoint_every > 0 and (
            istep % checkpoint_every == 0 or istep == n_steps
        ):
            checkpoint_writer(state, istep)

    if cfl_hits > 1:
        warnings.append(f"CFL limit exceeded on {cfl_hits} steps in total")
    if whistler_hits > 1:
        warnings.append(f"whistler limit exceeded on {whistler_hits} steps in total")
    records = monitor.records if monitor is not None else []
    return RunResult(state, records, blown_up, warnings)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def initial_data(
    kind: str,
    grid: Grid3,
    seed: int = 0,
    amplitude: float = 1.0,
    band: tuple[float, float] = (1.0, 3.0),
    mode: tuple[int, int, int] = (1, 0, 0),
) -> tuple[VectorField, VectorField]:
    """Solenoidal (u0, b0) pairs for the built-in initial conditions."""
    X, Y, Z = grid.mesh()
    a = amplitude
    if kind == "taylor_green":
        u = _from_phys(
            grid,
            a * np.sin(X) * np.cos(Y) * np.cos(Z),
            -a * np.cos(X) * np.sin(Y) * np.cos(Z),
            np.zeros(grid.shape),
        )
        b = _from_phys(
            grid,
            a * np.cos(X) * np.sin(Y) * np.sin(Z),
            a * np.sin(X) * np.cos(Y) * np.sin(Z),
            -2 * a * np.sin(X) * np.sin(Y) * np.cos(Z),
        )
        return u, b
    if kind == "beltrami_abc":
        def abc(A, B, C):
            return _from_phys(
                grid,
                a * (A * np.sin(Z) + C * np.cos(Y)),
                a * (B * np.sin(X) + A * np.cos(Z)),
                a * (C * np.sin(Y) + B * np.cos(X)),
            )
        return abc(1.0, 1.0, 1.0), abc(1.0, -0.5, 0.25)
    if kind == "random_band_limited":
        u = _random_solenoidal_band(grid, seed, band, a)
        b = _random_solenoidal_band(grid, seed + 104729, band, a)
        return u, b
    if kind == "single_mode":
        k = np.array(mode, dtype=float)
        if not np.any(k):
            raise ValueError("single_mode wavevector must be nonzero")
        khat = k / np.linalg.norm(k)
        trial = np.array([0.0, 1.0, 0.0]) if abs(khat[1]) < 0.9 else np.array([0.0, 0.0, 1.0])
        e1 = trial - np.dot(trial, khat) * khat
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(khat, e1)
        phase = mode[0] * X + mode[1] * Y + mode[2] * Z
        cosp = np.cos(phase)
        u = _from_phys(grid, a * e1[0] * cosp, a * e1[1] * cosp, a * e1[2] * cosp)
        b = _from_phys(grid, a * e2[0] * cosp, a * e2[1] * cosp, a * e2[2] * cosp)
        return u, b
    raise ValueError(f"unknown initial data kind {kind!r}")


def _from_phys(grid, vx, vy, vz) -> VectorField:
    v = VectorField(
        transform_forward(vx, grid),
        transform_forward(vy, grid),
        transform_forward(vz, grid),
    )
    # analytic divergence-free patterns survive projection unchanged
    return project_leray(v)


def _random_solenoidal_band(grid, seed, band, amplitude) -> VectorField:
    rng = np.random.default_rng(seed)
    comps = []
    shell = (grid.k_abs >= band[0]) & (grid.k_abs <= band[1]) & grid.dealias_mask
    for _ in range(3):
        c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        c = np.where(shell, c, 0.0)
        c[0, 0, 0] = 0.0
        comps.append(SpectralField(grid, hermitize(c)))
    v = project_leray(VectorField(*comps))
    norm = l2_norm(v)
    if norm == 0:
        return v
    scale = amplitude / norm
    return v.with_components(
        v.x.coeffs * scale, v.y.coeffs * scale, v.z.coeffs * scale, solenoidal=True
    )
