import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from heatrods.coefficients import BCVariant, coefficients_from_expressions
from heatrods.shooting import (
    Side,
    _forward_rod,
    _integrate,
    interface_batch,
    shoot_left,
    shoot_right,
    wkb_reference,
    write_trace_csv,
)

# frozen from the independent high-order oracle (DOP853 at 1e-13); see
# test_left_variable_density_matches_oracle which recomputes it in place
U0_RHO_1_PLUS_X2_LAM1 = 0.7970843768380496


def test_left_constant_pi_squared(const_coeffs):
    tr = shoot_left(const_coeffs, math.pi**2)
    assert tr.y_at_zero == pytest.approx(0.0, abs=1e-10)
    assert tr.flux_at_zero == pytest.approx(-1.0, abs=1e-10)


def test_left_constant_lambda_zero(const_coeffs):
    tr = shoot_left(const_coeffs, 0.0)
    assert tr.y_at_zero == pytest.approx(1.0, abs=1e-12)
    assert tr.flux_at_zero == pytest.approx(1.0, abs=1e-12)
    # solution is u(x) = x + 1 along the whole rod
    assert np.max(np.abs(tr.y - (tr.grid + 1.0))) < 1e-11


def test_right_dirichlet_quarter_pi(const_coeffs):
    tr = shoot_right(const_coeffs, (math.pi / 2) ** 2, BCVariant.DIRICHLET)
    assert tr.y_at_zero == pytest.approx(2.0 / math.pi, abs=1e-10)
    assert tr.flux_at_zero == pytest.approx(0.0, abs=1e-10)
    # initial conditions hold exactly at the starting endpoint x = 1
    assert tr.grid[-1] == 1.0
    assert tr.y[-1] == 0.0
    assert tr.flux[-1] == pytest.approx(-1.0, abs=0.0)


def test_right_neumann_pi_squared(const_coeffs):
    tr = shoot_right(const_coeffs, math.pi**2, BCVariant.NEUMANN)
    assert tr.y_at_zero == pytest.approx(-1.0, abs=1e-10)
    assert tr.flux_at_zero == pytest.approx(0.0, abs=1e-10)
    assert tr.y[-1] == 1.0
    assert tr.flux[-1] == 0.0
    # v(x) = cos(pi (1 - x)) along the rod
    assert np.max(np.abs(tr.y - np.cos(math.pi * (1 - tr.grid)))) < 1e-10


def test_right_dirichlet_density_four():
    c = coefficients_from_expressions("1", "1", "0", "4", "1", "0", 1.0)
    tr = shoot_right(c, 1.0, BCVariant.DIRICHLET)
    # closed form sin(2(1-x))/2 with sqrt(rho * lam) = 2
    assert tr.y_at_zero == pytest.approx(math.sin(2.0) / 2.0, abs=1e-9)
    assert tr.y_at_zero == pytest.approx(0.45464871341284085, abs=1e-9)


def test_left_variable_density_matches_oracle():
    c = coefficients_from_expressions("1 + x^2", "1", "0", "1", "1", "0", 1.0)
    tr = shoot_left(c, 1.0)

    def rhs(x, y):
        return [y[1], -(1.0 + x * x) * y[0]]

    oracle = solve_ivp(rhs, (-1.0, 0.0), [0.0, 1.0], method="DOP853",
                       rtol=1e-13, atol=1e-13)
    assert oracle.success
    assert tr.y_at_zero == pytest.approx(oracle.y[0, -1], abs=1e-9)
    assert oracle.y[0, -1] == pytest.approx(U0_RHO_1_PLUS_X2_LAM1, abs=1e-12)


def test_closed_form_agreement_random_lambdas(const_coeffs, tol):
    rng = np.random.default_rng(42)
    lams = rng.uniform(0.0, 400.0, size=20)
    for lam in lams:
        tr = shoot_left(const_coeffs, float(lam), n_grid=257)
        root = math.sqrt(lam)
        exact = np.sin(root * (tr.grid + 1.0)) / root if lam > 0 else tr.grid + 1.0
        assert np.max(np.abs(tr.y - exact)) < 1e-9


def test_parameter_derivative_matches_finite_differences(const_coeffs):
    c_var = coefficients_from_expressions(
        "1 + 0.3*x^2", "exp(0.2*x)", "0.5", "1.2 - 0.2*x", "1 + 0.1*x", "0.3", 1.0
    )
    for c in (const_coeffs, c_var):
        for lam in (0.7, 25.0, 180.0):
            h = 1e-5 * max(1.0, abs(lam))
            batch = interface_batch(c, [lam - h, lam, lam + h], BCVariant.DIRICHLET)
            fd_y = (batch.y_left[2] - batch.y_left[0]) / (2 * h)
            fd_p = (batch.flux_left[2] - batch.flux_left[0]) / (2 * h)
            assert batch.dy_left[1] == pytest.approx(fd_y, rel=1e-5, abs=1e-9)
            assert batch.dflux_left[1] == pytest.approx(fd_p, rel=1e-5, abs=1e-9)
            fd_yr = (batch.y_right[2] - batch.y_right[0]) / (2 * h)
            assert batch.dy_right[1] == pytest.approx(fd_yr, rel=1e-5, abs=1e-9)


def test_linearity_in_initial_data(const_coeffs, tol):
    rod = _forward_rod(const_coeffs, Side.LEFT, BCVariant.DIRICHLET)
    doubled = replace(rod, p0=2.0 * rod.p0)
    lams = np.array([3.0, 40.0])
    sol1 = _integrate(rod, lams, tol)
    sol2 = _integrate(doubled, lams, tol)
    assert np.allclose(2.0 * sol1.y[:, -1], sol2.y[:, -1], rtol=5e-9, atol=1e-12)


def test_wronskian_constant_along_rod(tol):
    c = coefficients_from_expressions(
        "1 + 0.3*x^2", "exp(0.2*x)", "0.5", "1", "1", "0", 1.0
    )
    rod = _forward_rod(c, Side.LEFT, BCVariant.DIRICHLET)
    other = replace(rod, y0=1.0, p0=0.0)
    lams = np.array([17.0])
    grid = np.linspace(0.0, 1.0, 513)
    s1 = _integrate(rod, lams, tol, t_eval=grid)
    s2 = _integrate(other, lams, tol, t_eval=grid)
    # sigma (y1 y2' - y2 y1') = y1 p2 - y2 p1
    w = s1.y[0] * s2.y[1] - s2.y[0] * s1.y[1]
    assert np.max(np.abs(w - w[0])) < 1e-9 * max(1.0, abs(w[0]))


def test_wkb_trivial_predictions(const_coeffs):
    pred = wkb_reference(const_coeffs, (10 * math.pi) ** 2, Side.LEFT)
    assert pred.y_at_zero == pytest.approx(0.0, abs=1e-12)
    pred = wkb_reference(const_coeffs, 1e4, Side.LEFT)
    assert pred.flux_at_zero == pytest.approx(math.cos(100.0), abs=1e-12)


def test_wkb_deviation_decays_like_inverse_sqrt():
    c = coefficients_from_expressions(
        "1 + 0.3*x^2", "exp(0.2*x)", "0.5 + 0.2*sin(2*x)",
        "1.2 - 0.25*cos(3*x)", "1 + 0.15*x", "0.4 + 0.3*x^2", 1.0,
    )
    lams = np.array([1e4, 4e4, 1.6e5])
    devs = []
    for lam in lams:
        tr = shoot_left(c, float(lam), n_grid=65)
        pred = wkb_reference(c, float(lam), Side.LEFT)
        dev = abs(tr.flux_at_zero - pred.flux_at_zero) + math.sqrt(lam) * abs(
            tr.y_at_zero - pred.y_at_zero
        )
        devs.append(dev)
    slope = np.polyfit(np.log(lams), np.log(devs), 1)[0]
    assert -0.65 <= slope <= -0.35


def test_trace_csv_dump(tmp_path, const_coeffs):
    tr = shoot_left(const_coeffs, 2.0, n_grid=33)
    path = tmp_path / "trace.csv"
    write_trace_csv(tr, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,y,flux"
    assert len(lines) == 34
