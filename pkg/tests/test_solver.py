"""Solver right-hand side, steppers, energy identities and initial data."""

import math

import numpy as np
import pytest
import scipy.fft as sfft

from tfmhd.checkpoint import read_state_fields, write_checkpoint
from tfmhd.grid import Grid3, SpectralField, VectorField
from tfmhd.operators import (
    curl,
    divergence_residual,
    inner_l2,
    l2_norm,
    nonlinear_product,
    sobolev_norm,
    transform_forward,
)
from tfmhd.solver import (
    PhysParams,
    SolverState,
    Stepper,
    _pack,
    energy_functional,
    helmholtz_invert,
    initial_data,
    make_state,
    modified_energy_l2,
    rhs,
    run,
    step,
)

from conftest import random_solenoidal


def tg_state(n=16, params=None, amplitude=1.0):
    grid = Grid3(n)
    params = params or PhysParams(nu=0.01, eta=0.01, alpha=0.1, hall=0.5)
    u, b = initial_data("taylor_green", grid, amplitude=amplitude)
    return make_state(u, b, params)


class TestParams:
    def test_negative_rejected(self):
        with pytest.raises(ValueError, match="nu"):
            PhysParams(nu=-1)
        with pytest.raises(ValueError, match="alpha"):
            PhysParams(alpha=float("nan"))


class TestHelmholtz:
    def test_alpha_zero_identity(self, grid16):
        v = random_solenoidal(grid16, 1)
        w = helmholtz_invert(v, 0.0)
        for a, b in zip(v.components, w.components):
            assert np.array_equal(a.coeffs, b.coeffs)

    def test_constant_unchanged(self, grid16):
        ones = transform_forward(np.ones(grid16.shape), grid16)
        zeros = SpectralField.zero(grid16)
        v = VectorField(ones, zeros, zeros)
        w = helmholtz_invert(v, 3.7)
        assert w.x.coeffs[0, 0, 0] == pytest.approx(1.0)

    def test_mode_two_multiplier(self, grid16):
        c = np.zeros(grid16.shape, dtype=complex)
        c[2, 0, 0] = c[-2, 0, 0] = 0.5
        v = VectorField(SpectralField(grid16, c), SpectralField.zero(grid16), SpectralField.zero(grid16))
        w = helmholtz_invert(v, 0.25)
        assert w.x.coeffs[2, 0, 0] == pytest.approx(0.25)  # 0.5 / (1 + 0.25 * 4)


class TestRhs:
    def test_zero_state(self, grid16):
        state = make_state(VectorField.zero(grid16), VectorField.zero(grid16), PhysParams())
        du, db = rhs(state)
        assert l2_norm(du) == 0.0
        assert l2_norm(db) == 0.0

    def test_beltrami_magnetic_decay(self, grid16):
        # u = 0, curl b = b: the Hall term vanishes and db is pure
        # screened diffusion -eta |k|^2 / (1 + alpha |k|^2) b with |k| = 1
        X, _, Z = grid16.mesh()
        b = VectorField(
            transform_forward(np.zeros(grid16.shape), grid16),
            transform_forward(np.sin(X), grid16),
            transform_forward(np.cos(X), grid16),
            solenoidal=True,
        )
        w = curl(b)
        for cb, cw in zip(b.components, w.components):
            assert np.max(np.abs(cb.coeffs - cw.coeffs)) < 1e-13
        params = PhysParams(nu=0.02, eta=0.03, alpha=0.5, hall=0.7)
        state = make_state(VectorField.zero(grid16), b, params)
        du, db = rhs(state)
        factor = -params.eta * 1.0 / (1.0 + params.alpha * 1.0)
        for c_db, c_b in zip(db.components, b.components):
            assert np.max(np.abs(c_db.coeffs - factor * c_b.coeffs)) < 1e-13
        assert l2_norm(du) < 1e-13

    def test_outputs_solenoidal(self, grid16):
        u, b = initial_data("random_band_limited", grid16, seed=3, amplitude=0.5)
        state = make_state(u, b, PhysParams(nu=0.01, eta=0.01, alpha=0.2, hall=0.3))
        du, db = rhs(state)
        assert divergence_residual(du) < 1e-12
        assert divergence_residual(db) < 1e-12


class TestNeutralityIdentities:
    def test_hall_term_energy_neutral(self, grid16):
        u, b = initial_data("taylor_green", grid16)
        J = curl(b)
        jxb = nonlinear_product(J, b, "cross")
        hall_contrib = inner_l2(curl(jxb), b)
        scale = l2_norm(J) * l2_norm(b)
        assert abs(hall_contrib) <= 1e-10 * max(scale, 1e-30)

    def test_advection_neutrality(self, grid16):
        u, b = initial_data("random_band_limited", grid16, seed=5, amplitude=1.0, band=(1, 3))
        adv_uu = nonlinear_product(u, u, "advective")
        assert abs(inner_l2(adv_uu, u)) <= 1e-10 * l2_norm(u) ** 3
        adv_bb = nonlinear_product(b, b, "advective")
        adv_bu = nonlinear_product(b, u, "advective")
        coupled = inner_l2(adv_bb, u) + inner_l2(adv_bu, b)
        assert abs(coupled) <= 1e-10 * l2_norm(b) ** 2 * l2_norm(u)


class TestStep:
    def test_zero_state_stays_zero(self, grid16):
        state = make_state(VectorField.zero(grid16), VectorField.zero(grid16), PhysParams(nu=0.1))
        out = step(state, 1e-2)
        assert l2_norm(out.u) == 0.0
        assert out.t == pytest.approx(1e-2)

    @pytest.mark.parametrize("scheme,tol", [("rk4_integrating_factor", 1e-12), ("imex_cnab2", 1e-8)])
    def test_linear_decay_single_mode(self, scheme, tol):
        grid = Grid3(16)
        params = PhysParams(nu=0.1, eta=0.05, alpha=0.25, hall=0.0)
        u, b = initial_data("single_mode", grid, amplitude=1.0, mode=(1, 0, 0))
        state = make_state(u, b, params)
        dt = 1e-2
        stepper = Stepper(grid, params, dt, scheme, nonlinear=None)
        Y, _ = stepper.step(_pack(state), 0.0)
        decay_u = math.exp(-params.nu * 1.0 * dt)
        decay_b = math.exp(-params.eta * 1.0 * dt / (1.0 + params.alpha * 1.0))
        assert np.max(np.abs(Y[:3] - decay_u * _pack(state)[:3])) <= tol
        assert np.max(np.abs(Y[3:] - decay_b * _pack(state)[3:])) <= tol

    def test_ideal_energy_drift_small(self):
        # nu = eta = 0: modified energy conserved up to stepper error
        grid = Grid3(16)
        params = PhysParams(nu=0.0, eta=0.0, alpha=0.1, hall=0.5)
        u, b = initial_data("taylor_green", grid)
        state = make_state(u, b, params)
        e0 = modified_energy_l2(state)
        for _ in range(20):
            state = step(state, 1e-3)
        drift = abs(modified_energy_l2(state) - e0) / e0
        assert drift < 1e-8

    def test_schemes_agree_to_second_order(self):
        grid = Grid3(16)
        params = PhysParams(nu=0.02, eta=0.02, alpha=0.1, hall=0.2)
        u, b = initial_data("taylor_green", grid, amplitude=0.5)

        def diff_at(dt):
            n_steps = int(round(0.1 / dt))
            s_rk = make_state(u, b, params)
            s_ab = make_state(u, b, params)
            rk = Stepper(grid, params, dt, "rk4_integrating_factor")
            ab = Stepper(grid, params, dt, "imex_cnab2")
            Yr, Ya = _pack(s_rk), _pack(s_ab)
            for i in range(n_steps):
                Yr, _ = rk.step(Yr, i * dt)
                Ya, _ = ab.step(Ya, i * dt)
            return float(np.sqrt(np.sum(np.abs(Yr - Ya) ** 2)))

        d1 = diff_at(2e-2)
        d2 = diff_at(1e-2)
        assert d1 / d2 == pytest.approx(4.0, rel=0.8)  # O(dt^2) separation


class TestRun:
    def test_t_end_zero(self, grid16):
        state = tg_state()
        result = run(state, 0.0, 1e-3)
        assert result.final is state
        assert result.records == []
        assert not result.blown_up

    def test_linear_cumulative_error(self):
        grid = Grid3(16)
        params = PhysParams(nu=0.1, eta=0.05, alpha=0.25)
        u, b = initial_data("single_mode", grid, amplitude=1.0, mode=(1, 0, 0))
        state = make_state(u, b, params)
        dt, n_steps = 1e-2, 100
        result = run(state, n_steps * dt, dt, linear_only=True)
        t = n_steps * dt
        exact_u = math.exp(-params.nu * t)
        exact_b = math.exp(-params.eta * t / (1.0 + params.alpha))
        err_u = abs(l2_norm(result.final.u) - exact_u * l2_norm(u))
        err_b = abs(l2_norm(result.final.b) - exact_b * l2_norm(b))
        assert err_u < 1e-6 and err_b < 1e-6

    def test_energy_law_residual(self):
        # discrete d/dt (modified energy) + 2 nu ||grad u||^2 + 2 eta ||grad b||^2 ~ 0
        grid = Grid3(16)
        params = PhysParams(nu=0.01, eta=0.01, alpha=0.1, hall=0.5)
        u, b = initial_data("taylor_green", grid)
        state = make_state(u, b, params)
        dt = 1e-3
        energies, dissipations, states = [], [], [state]
        for _ in range(50):
            state = step(state, dt)
            states.append(state)
        for s in states:
            energies.append(modified_energy_l2(s))
            dissipations.append(
                2 * params.nu * sobolev_norm(s.u, 1.0, homogeneous=True) ** 2
                + 2 * params.eta * sobolev_norm(s.b, 1.0, homogeneous=True) ** 2
            )
        resid = 0.0
        for i in range(len(states) - 1):
            resid += energies[i + 1] - energies[i] + dt * 0.5 * (dissipations[i] + dissipations[i + 1])
        per_unit_time = abs(resid) / (50 * dt) / energies[0]
        assert per_unit_time < 1e-6

    def test_blowup_flag_on_nan(self, grid16):
        # a state engineered to go non-finite immediately
        u, b = initial_data("taylor_green", grid16, amplitude=1.0)
        bad = u.with_components(
            u.x.coeffs * np.inf, u.y.coeffs, u.z.coeffs, solenoidal=True
        )
        state = SolverState(bad, b, 0.0, PhysParams())
        result = run(state, 0.01, 1e-3)
        assert result.blown_up
        assert any("blow-up" in w for w in result.warnings)

    def test_cfl_warning(self):
        grid = Grid3(16)
        params = PhysParams(nu=0.001)
        u, b = initial_data("taylor_green", grid, amplitude=50.0)
        state = make_state(u, b, params)
        result = run(state, 2e-2, 1e-2)
        assert any("CFL" in w for w in result.warnings)

    def test_reference_navier_stokes(self):
        # h = alpha = 0 and b = 0 reduces to incompressible NS; compare the
        # kinetic energy series against an independent collocation solver
        # written directly on numpy arrays (advective form, plain RK4).
        n = 32
        grid = Grid3(n)
        nu, dt, n_steps = 0.02, 1e-3, 60
        params = PhysParams(nu=nu)
        u, _ = initial_data("taylor_green", grid)
        state = make_state(u, VectorField.zero(grid), params)

        # --- independent reference implementation -------------------------
        k1 = np.fft.fftfreq(n, d=1.0 / n)
        KX, KY, KZ = np.meshgrid(k1, k1, k1, indexing="ij")
        K2 = KX**2 + KY**2 + KZ**2
        K2s = np.where(K2 == 0, 1.0, K2)
        cut = (2.0 / 3.0) * (n // 2)
        mask = (np.abs(KX) < cut) & (np.abs(KY) < cut) & (np.abs(KZ) < cut)
        x = np.arange(n) * 2 * np.pi / n
        X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
        U = [
            np.sin(X) * np.cos(Y) * np.cos(Z),
            -np.cos(X) * np.sin(Y) * np.cos(Z),
            np.zeros_like(X),
        ]
        Uh = [sfft.fftn(c) for c in U]

        def ns_rhs(Uh):
            Up = [sfft.ifftn(c).real for c in Uh]
            out = []
            for i in range(3):
                gx = sfft.ifftn(1j * KX * Uh[i]).real
                gy = sfft.ifftn(1j * KY * Uh[i]).real
                gz = sfft.ifftn(1j * KZ * Uh[i]).real
                adv = Up[0] * gx + Up[1] * gy + Up[2] * gz
                out.append(-sfft.fftn(adv) * mask)
            div = KX * out[0] + KY * out[1] + KZ * out[2]
            proj = [out[i] - (KX, KY, KZ)[i] * div / K2s for i in range(3)]
            return [proj[i] - nu * K2 * Uh[i] for i in range(3)]

        ref_energy = []
        for _ in range(n_steps):
            k1_ = ns_rhs(Uh)
            k2_ = ns_rhs([Uh[i] + 0.5 * dt * k1_[i] for i in range(3)])
            k3_ = ns_rhs([Uh[i] + 0.5 * dt * k2_[i] for i in range(3)])
            k4_ = ns_rhs([Uh[i] + dt * k3_[i] for i in range(3)])
            Uh = [
                Uh[i] + dt / 6 * (k1_[i] + 2 * k2_[i] + 2 * k3_[i] + k4_[i])
                for i in range(3)
            ]
            Up = [sfft.ifftn(c).real for c in Uh]
            ref_energy.append(0.5 * np.sum(Up[0] ** 2 + Up[1] ** 2 + Up[2] ** 2) / n**3)

        # --- solver under test --------------------------------------------
        energies = []
        for i in range(n_steps):
            state = step(state, dt)
            energies.append(0.5 * l2_norm(state.u) ** 2 / (2 * np.pi) ** 3)

        rel = [abs(a - b) / b for a, b in zip(energies, ref_energy)]
        assert max(rel) < 1e-6


class TestEnergyFunctional:
    def test_zero_state(self, grid16):
        state = make_state(VectorField.zero(grid16), VectorField.zero(grid16), PhysParams(alpha=0.3))
        e = energy_functional(state, 3.0)
        assert e["l2_part"] == 0.0
        assert e["modified_total"] == 0.0

    def test_alpha_zero_reduction(self, grid16):
        u, b = initial_data("taylor_green", grid16)
        state = make_state(u, b, PhysParams())
        e = energy_functional(state, 2.0)
        assert e["modified_total"] == pytest.approx(e["hs_part"], rel=1e-14)

    def test_single_mode_h3_weight(self, grid16):
        u, b = initial_data("single_mode", grid16, amplitude=0.3, mode=(1, 0, 0))
        state = make_state(u, VectorField.zero(grid16), PhysParams())
        e = energy_functional(state, 3.0)
        assert e["hs_part"] == pytest.approx(8.0 * l2_norm(u) ** 2, rel=1e-12)


class TestInitialData:
    @pytest.mark.parametrize("kind", ["taylor_green", "beltrami_abc", "random_band_limited", "single_mode"])
    def test_solenoidal(self, grid16, kind):
        u, b = initial_data(kind, grid16, seed=2)
        assert divergence_residual(u) < 1e-12
        assert divergence_residual(b) < 1e-12

    def test_unknown_kind(self, grid16):
        with pytest.raises(ValueError, match="kind"):
            initial_data("vortex_sheet", grid16)

    def test_random_reproducible(self, grid16):
        u1, b1 = initial_data("random_band_limited", grid16, seed=9)
        u2, b2 = initial_data("random_band_limited", grid16, seed=9)
        for a, c in zip((*u1.components, *b1.components), (*u2.components, *b2.components)):
            assert np.array_equal(a.coeffs, c.coeffs)

    def test_single_mode_polarization(self, grid16):
        u, b = initial_data("single_mode", grid16, mode=(1, 0, 0))
        # u along y, b along z for k = x-hat
        assert l2_norm(u.x) < 1e-14 and l2_norm(u.z) < 1e-14
        assert l2_norm(b.x) < 1e-14 and l2_norm(b.y) < 1e-14


class TestCheckpoint:
    def test_round_trip(self, grid16, tmp_path):
        u, b = initial_data("random_band_limited", grid16, seed=4)
        path = tmp_path / "state.tfmhd"
        write_checkpoint(path, [u, b])
        grid2, u2, b2 = read_state_fields(path)
        assert grid2.n == 16
        for a, c in zip((*u.components, *b.components), (*u2.components, *b2.components)):
            # complex64 payload: single precision round trip
            assert np.max(np.abs(a.coeffs - c.coeffs)) < 1e-6

    def test_magic_check(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"NOTAMAGIC" + b"\0" * 64)
        with pytest.raises(ValueError, match="TFMHD1"):
            read_state_fields(path)

    def test_byte_identical(self, grid16, tmp_path):
        u, b = initial_data("random_band_limited", grid16, seed=4)
        p1, p2 = tmp_path / "a.tfmhd", tmp_path / "b.tfmhd"
        write_checkpoint(p1, [u, b])
        write_checkpoint(p2, [u, b])
        assert p1.read_bytes() == p2.read_bytes()
