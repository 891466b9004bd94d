import math

import numpy as np
import pytest

from heatrods.coefficients import BCVariant
from heatrods.moments import (
    build_biorthogonal,
    make_moment_problem,
    project_initial_data,
    sampled_control,
    synthesize_control,
)
from heatrods.quadrature import adaptive_simpson
from heatrods.simulator import (
    SimulationInputError,
    build_fd_system,
    simulate_fd,
    simulate_galerkin,
    state_from_mode,
    state_from_samples,
    verify_null_control,
)


@pytest.fixture(scope="module")
def pairs16(const_report_d):
    assert len(const_report_d.eigenvalues) >= 13
    return const_report_d.eigenvalues


def smooth_state(c, pairs):
    grid_u = pairs[0].grid_u
    grid_v = pairs[0].grid_v
    return state_from_samples(
        c, grid_u, np.sin(math.pi * (grid_u + 1.0)),
        grid_v, np.sin(math.pi * (1.0 - grid_v)), 0.0,
    )


class TestGalerkin:
    def test_free_decay_single_mode(self, const_coeffs, pairs16):
        y0 = state_from_mode(const_coeffs, pairs16[0])
        res = simulate_galerkin(const_coeffs, BCVariant.DIRICHLET, y0, None, 1.0,
                                pairs16[:6])
        lam1 = pairs16[0].lam
        a_T = res.modal_history[-1]
        assert a_T[0] == pytest.approx(math.exp(-lam1), abs=1e-10)
        assert np.max(np.abs(a_T[1:])) < 1e-10

    def test_zero_state_stays_zero(self, const_coeffs, pairs16):
        grid_u = pairs16[0].grid_u
        grid_v = pairs16[0].grid_v
        y0 = state_from_samples(const_coeffs, grid_u, np.zeros_like(grid_u),
                                grid_v, np.zeros_like(grid_v), 0.0)
        res = simulate_galerkin(const_coeffs, BCVariant.DIRICHLET, y0, None, 1.0,
                                pairs16[:4])
        assert np.all(res.modal_history == 0.0)
        assert res.terminal_energy == 0.0

    def test_dissipativity_free(self, const_coeffs, pairs16):
        y0 = smooth_state(const_coeffs, pairs16)
        res = simulate_galerkin(const_coeffs, BCVariant.DIRICHLET, y0, None, 1.0,
                                pairs16[:8])
        assert np.all(np.diff(res.energies) <= 1e-15)

    def test_rejects_coarse_sampled_control(self, const_coeffs, pairs16):
        y0 = state_from_mode(const_coeffs, pairs16[0])
        times = np.linspace(0.0, 1.0, 11)
        control = sampled_control(times, np.sin(times), 1.0)
        with pytest.raises(SimulationInputError, match="coarser"):
            simulate_galerkin(const_coeffs, BCVariant.DIRICHLET, y0, control, 1.0,
                              pairs16[:4])

    def test_duality_identity(self, const_coeffs, pairs16):
        # a_n(T) must equal exp(-lam T) Y_n0 - sigma2(1) trace_n
        # int h(t) exp(-lam (T-t)) dt for any input h
        rng = np.random.default_rng(11)
        weights = rng.normal(size=6) * np.exp(-0.4 * np.arange(6))
        grid_u = pairs16[0].grid_u
        grid_v = pairs16[0].grid_v
        u = sum(w * p.u_part for w, p in zip(weights, pairs16[:6]))
        v = sum(w * p.v_part for w, p in zip(weights, pairs16[:6]))
        z = sum(w * p.z for w, p in zip(weights, pairs16[:6]))
        y0 = state_from_samples(const_coeffs, grid_u, u, grid_v, v, z)

        horizon = 1.0
        times = np.linspace(0.0, horizon, 8193)
        h_fun = lambda t: np.sin(2.0 * math.pi * t) * np.exp(-t)
        control = sampled_control(times, h_fun(times), horizon)
        res = simulate_galerkin(const_coeffs, BCVariant.DIRICHLET, y0, control,
                                horizon, pairs16[:6])
        y0_coeffs = project_initial_data(y0, pairs16[:6], const_coeffs)
        sigma2_1 = const_coeffs.sigma2(1.0)
        for n in range(6):
            lam = pairs16[n].lam
            boundary = adaptive_simpson(
                lambda t: h_fun(t) * math.exp(-lam * (horizon - t)), 0.0, horizon,
                rtol=1e-12, atol=1e-13,
            )
            expected = (
                math.exp(-lam * horizon) * y0_coeffs[n]
                - sigma2_1 * pairs16[n].trace_right * boundary
            )
            assert res.modal_history[-1, n] == pytest.approx(
                expected, rel=1e-6, abs=1e-9
            )


class TestFiniteDifference:
    def test_free_decay_matches_modal(self, const_coeffs, pairs16):
        y0 = state_from_mode(const_coeffs, pairs16[0])
        res = simulate_fd(const_coeffs, BCVariant.DIRICHLET, y0, None, 1.0,
                          nx=128, nt=2048, eigenpairs=pairs16[:4])
        exact = math.exp(-2.0 * pairs16[0].lam) * y0.energy_H
        assert res.terminal_energy == pytest.approx(exact, rel=1e-2)

    def test_neumann_free_decay(self, const_coeffs, const_report_n):
        pairs = const_report_n.eigenvalues
        y0 = state_from_mode(const_coeffs, pairs[0])
        res = simulate_fd(const_coeffs, BCVariant.NEUMANN, y0, None, 1.0,
                          nx=128, nt=2048, eigenpairs=pairs[:4])
        exact = math.exp(-2.0 * pairs[0].lam) * y0.energy_H
        assert res.terminal_energy == pytest.approx(exact, rel=1e-2)

    def test_dissipativity_free(self, const_coeffs, pairs16):
        y0 = smooth_state(const_coeffs, pairs16)
        for variant in (BCVariant.DIRICHLET, BCVariant.NEUMANN):
            res = simulate_fd(const_coeffs, variant, y0, None, 1.0,
                              nx=96, nt=768)
            assert np.all(np.diff(res.energies) <= 1e-15)

    def test_steady_state_with_constant_input(self, const_coeffs):
        # q = 0, h = c0 held for a long horizon: the terminal state satisfies
        # the discrete elliptic problem A y = source * c0
        c0 = 0.75
        nx, nt = 64, 2048
        system = build_fd_system(const_coeffs, BCVariant.DIRICHLET, nx)
        grid_u = np.linspace(-1.0, 0.0, 129)
        grid_v = np.linspace(0.0, 1.0, 129)
        y0 = state_from_samples(const_coeffs, grid_u, np.zeros(129),
                                grid_v, np.zeros(129), 0.0)
        times = np.linspace(0.0, 20.0, 20001)
        control = sampled_control(times, np.full(times.size, c0), 20.0)
        res = simulate_fd(const_coeffs, BCVariant.DIRICHLET, y0, control, 20.0,
                          nx=nx, nt=nt)
        snap = res.terminal
        yvec = np.concatenate((snap.u[1:nx], [snap.z], snap.v[1:nx]))
        resid = np.empty_like(yvec)
        band = system.banded
        resid = band[1] * yvec
        resid[:-1] += band[0, 1:] * yvec[1:]
        resid[1:] += band[2, :-1] * yvec[:-1]
        resid -= system.source * c0
        assert np.max(np.abs(resid)) <= 1e-6

    def test_grid_convergence_order(self, const_coeffs, pairs16):
        y0 = state_from_mode(const_coeffs, pairs16[0])
        lam1 = pairs16[0].lam
        errors = []
        for nx, nt in ((64, 512), (128, 1024), (256, 2048)):
            res = simulate_fd(const_coeffs, BCVariant.DIRICHLET, y0, None, 0.5,
                              nx=nx, nt=nt)
            snap = res.terminal
            decay = math.exp(-lam1 * 0.5)
            pair = pairs16[0]
            u_exact = decay * np.interp(snap.grid_u, pair.grid_u, pair.u_part)
            v_exact = decay * np.interp(snap.grid_v, pair.grid_v, pair.v_part)
            err = math.sqrt(
                np.trapezoid((snap.u - u_exact) ** 2, snap.grid_u)
                + np.trapezoid((snap.v - v_exact) ** 2, snap.grid_v)
            )
            errors.append(err)
        order1 = math.log2(errors[0] / errors[1])
        order2 = math.log2(errors[1] / errors[2])
        assert order1 >= 1.8
        assert order2 >= 1.8

    def test_interface_flux_jump_second_order(self, const_coeffs, pairs16):
        resids = []
        y0 = state_from_mode(const_coeffs, pairs16[0])
        for nx in (64, 128):
            res = simulate_fd(const_coeffs, BCVariant.DIRICHLET, y0, None, 0.5,
                              nx=nx, nt=4096, n_store=512, store_snapshots=True)
            k = len(res.snapshots) // 2
            snap = res.snapshots[k]
            dt_store = res.times[k + 1] - res.times[k]
            z_dot = (res.z_history[k + 1] - res.z_history[k - 1]) / (2 * dt_store)
            dx = snap.grid_v[1] - snap.grid_v[0]
            v_x0 = (-3 * snap.v[0] + 4 * snap.v[1] - snap.v[2]) / (2 * dx)
            u_x0 = (3 * snap.u[-1] - 4 * snap.u[-2] + snap.u[-3]) / (2 * dx)
            resid = abs(const_coeffs.mass * z_dot - v_x0 + u_x0)
            resids.append(resid)
        assert resids[0] / resids[1] >= 3.4  # order >= ~1.8


class TestCrossValidation:
    def test_galerkin_vs_fd_smooth_control(self, const_coeffs, pairs16):
        y0 = smooth_state(const_coeffs, pairs16)
        horizon = 1.0
        times = np.linspace(0.0, horizon, 4097)
        control = sampled_control(times, np.sin(2 * math.pi * times) * np.exp(-times),
                                  horizon)
        gal = simulate_galerkin(const_coeffs, BCVariant.DIRICHLET, y0, control,
                                horizon, pairs16[:13])
        fd = simulate_fd(const_coeffs, BCVariant.DIRICHLET, y0, control, horizon,
                         nx=256, nt=4096)
        assert fd.terminal_energy == pytest.approx(gal.terminal_energy, rel=1e-3)


class TestVerification:
    def test_null_control_dirichlet(self, const_coeffs, pairs16):
        y0 = state_from_mode(const_coeffs, pairs16[0])
        report, signal = verify_null_control(
            const_coeffs, BCVariant.DIRICHLET, y0, 1.0, 8, nx=128, nt=2048,
            eigenpairs=pairs16,
        )
        assert report.modal_ok
        assert report.modal_terminal_energy <= 1e-10 * report.initial_energy
        assert report.fd_ok
        assert report.baseline_ok
        assert report.passed

    def test_null_control_mixture(self, const_coeffs, pairs16):
        # Y0 = (phi_1 + phi_2 + phi_3)/sqrt(3): baseline decays like the
        # closed-form diagonal average
        grid_u = pairs16[0].grid_u
        grid_v = pairs16[0].grid_v
        w = 1.0 / math.sqrt(3.0)
        u = w * sum(p.u_part for p in pairs16[:3])
        v = w * sum(p.v_part for p in pairs16[:3])
        z = w * sum(p.z for p in pairs16[:3])
        y0 = state_from_samples(const_coeffs, grid_u, u, grid_v, v, z)
        report, _ = verify_null_control(
            const_coeffs, BCVariant.DIRICHLET, y0, 1.0, 8, nx=128, nt=2048,
            eigenpairs=pairs16,
        )
        assert report.passed
        expected_baseline = sum(
            math.exp(-2.0 * pairs16[k].lam) for k in range(3)
        ) / 3.0
        assert report.baseline_terminal_energy == pytest.approx(
            expected_baseline, rel=1e-6
        )
