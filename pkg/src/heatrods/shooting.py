"""Initial value problems for the two rods at a given spectral parameter.

Each rod is integrated as the first-order system (y, p) with p = sigma * y',
so y' = p / sigma and p' = (q - lambda * rho) * y.  The sensitivity of the
interface values with respect to lambda is obtained by integrating the
variational system (w, r) alongside: w' = r / sigma,
r' = (q - lambda * rho) * w - rho * y.

The right rod is integrated backward from x = 1 through the substitution
s = 1 - x, which maps it onto a forward problem with reflected coefficients.
Many spectral parameters are integrated in one stacked solver call; the
embedded 5(4) pair controls every component at the configured tolerances.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .coefficients import BCVariant, CoefficientSet, Tolerances, travel_times


class IntegrationError(RuntimeError):
    """The adaptive integrator failed to complete a rod traversal."""


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class ShootingTrace:
    """Sampled solution of one rod IVP at a fixed spectral parameter.

    ``grid`` ascends along the physical coordinate; ``flux`` holds sigma * y'.
    Interface values are one-sided limits at x = 0.
    """

    lam: float
    side: Side
    grid: np.ndarray
    y: np.ndarray
    flux: np.ndarray
    y_at_zero: float
    flux_at_zero: float
    dy_dlambda_at_zero: float
    dflux_dlambda_at_zero: float


@dataclass(frozen=True)
class InterfaceBatch:
    """Interface values of both rods for a vector of spectral parameters.

    Fluxes are sigma * y' one-sided at x = 0; ``d``-prefixed arrays are
    derivatives with respect to the spectral parameter.
    """

    lams: np.ndarray
    y_left: np.ndarray
    flux_left: np.ndarray
    dy_left: np.ndarray
    dflux_left: np.ndarray
    y_right: np.ndarray
    flux_right: np.ndarray
    dy_right: np.ndarray
    dflux_right: np.ndarray


@dataclass(frozen=True)
class _Rod:
    """One rod expressed in a forward coordinate t in [0, 1]."""

    rho: Callable
    sigma: Callable
    q: Callable
    y0: float
    p0: float


def _forward_rod(c: CoefficientSet, side: Side, variant: BCVariant) -> _Rod:
    # raw evaluators skip the Coefficient wrapper in the stepping hot path
    if side is Side.LEFT:
        # natural coordinate t = x + 1; u(-1) = 0, u'(-1) = 1
        rho_f, sigma_f, q_f = c.rho1._eval, c.sigma1._eval, c.q1._eval
        rho = lambda t: rho_f(t - 1.0)
        sigma = lambda t: sigma_f(t - 1.0)
        q = lambda t: q_f(t - 1.0)
        return _Rod(rho, sigma, q, y0=0.0, p0=c.sigma1(-1.0))
    # reflected coordinate t = 1 - x
    rho_f, sigma_f, q_f = c.rho2._eval, c.sigma2._eval, c.q2._eval
    rho = lambda t: rho_f(1.0 - t)
    sigma = lambda t: sigma_f(1.0 - t)
    q = lambda t: q_f(1.0 - t)
    if variant is BCVariant.DIRICHLET:
        # v(1) = 0, v'(1) = -1  ->  yhat(0) = 0, yhat'(0) = 1
        return _Rod(rho, sigma, q, y0=0.0, p0=c.sigma2(1.0))
    # v'(1) = 0, v(1) = 1  ->  yhat(0) = 1, yhat'(0) = 0
    return _Rod(rho, sigma, q, y0=1.0, p0=0.0)


def _make_rhs(rod: _Rod, lams: np.ndarray) -> Callable:
    rho, sigma, q = rod.rho, rod.sigma, rod.q
    k = lams.size

    def rhs(t, state):
        y = state[:k]
        p = state[k : 2 * k]
        w = state[2 * k : 3 * k]
        r = state[3 * k :]
        s = sigma(t)
        rho_t = rho(t)
        coef = q(t) - lams * rho_t
        return np.concatenate((p / s, coef * y, r / s, coef * w - rho_t * y))

    return rhs


def _initial_state(rod: _Rod, k: int) -> np.ndarray:
    state = np.zeros(4 * k)
    state[:k] = rod.y0
    state[k : 2 * k] = rod.p0
    return state


def _integrate(
    rod: _Rod,
    lams: np.ndarray,
    tol: Tolerances,
    t_eval: np.ndarray | None = None,
):
    rhs = _make_rhs(rod, lams)
    sol = solve_ivp(
        rhs,
        (0.0, 1.0),
        _initial_state(rod, lams.size),
        method="RK45",
        rtol=tol.ode_rtol,
        atol=tol.ode_atol,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        reached = sol.t[-1] if sol.t.size else 0.0
        raise IntegrationError(
            f"rod integration failed near t={reached:.6g}: {sol.message}"
        )
    return sol


def interface_batch(
    c: CoefficientSet,
    lams,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
) -> InterfaceBatch:
    """Interface values and lambda-derivatives of both rods at many parameters."""
    tol = tol or Tolerances()
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    k = lams.size

    left = _integrate(_forward_rod(c, Side.LEFT, variant), lams, tol)
    yl, pl, wl, rl = left.y[:, -1].reshape(4, k)

    right = _integrate(_forward_rod(c, Side.RIGHT, variant), lams, tol)
    yr, pr, wr, rr = right.y[:, -1].reshape(4, k)

    # reflected rod: sigma2 * v_x(0+) = -phat(1), and likewise for d/dlambda
    return InterfaceBatch(
        lams=lams,
        y_left=yl, flux_left=pl, dy_left=wl, dflux_left=rl,
        y_right=yr, flux_right=-pr, dy_right=wr, dflux_right=-rr,
    )


def rod_traces(
    c: CoefficientSet,
    lams,
    side: Side,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
    n_grid: int | None = None,
):
    """Dense solutions of one rod for a vector of parameters.

    Returns ``(x, y, flux, dy0, dflux0)`` with ``x`` ascending along the rod,
    ``y`` and ``flux`` of shape (len(lams), n_grid), and the interface
    lambda-derivatives per parameter.
    """
    tol = tol or Tolerances()
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    k = lams.size
    n = n_grid or tol.grid_points
    t_grid = np.linspace(0.0, 1.0, n)
    sol = _integrate(_forward_rod(c, side, variant), lams, tol, t_eval=t_grid)
    y = sol.y[:k]
    p = sol.y[k : 2 * k]
    w = sol.y[2 * k : 3 * k]
    r = sol.y[3 * k :]
    if side is Side.LEFT:
        x = t_grid - 1.0
        return x, y, p, w[:, -1], r[:, -1]
    x = 1.0 - t_grid[::-1]
    y_x = y[:, ::-1]
    flux_x = -p[:, ::-1]
    return x, y_x, flux_x, w[:, -1], -r[:, -1]


def shoot_left(
    c: CoefficientSet, lam: float, tol: Tolerances | None = None,
    n_grid: int | None = None,
) -> ShootingTrace:
    """Solve the left-rod IVP u(-1) = 0, u'(-1) = 1 at the given parameter."""
    x, y, flux, dy0, dflux0 = rod_traces(
        c, [lam], Side.LEFT, BCVariant.DIRICHLET, tol, n_grid
    )
    return ShootingTrace(
        lam=float(lam), side=Side.LEFT, grid=x, y=y[0], flux=flux[0],
        y_at_zero=float(y[0, -1]), flux_at_zero=float(flux[0, -1]),
        dy_dlambda_at_zero=float(dy0[0]), dflux_dlambda_at_zero=float(dflux0[0]),
    )


def shoot_right(
    c: CoefficientSet, lam: float, variant: BCVariant,
    tol: Tolerances | None = None, n_grid: int | None = None,
) -> ShootingTrace:
    """Solve the right-rod IVP backward from x = 1 for the given variant."""
    x, y, flux, dy0, dflux0 = rod_traces(c, [lam], Side.RIGHT, variant, tol, n_grid)
    return ShootingTrace(
        lam=float(lam), side=Side.RIGHT, grid=x, y=y[0], flux=flux[0],
        y_at_zero=float(y[0, 0]), flux_at_zero=float(flux[0, 0]),
        dy_dlambda_at_zero=float(dy0[0]), dflux_dlambda_at_zero=float(dflux0[0]),
    )


@dataclass(frozen=True)
class WkbPrediction:
    y_at_zero: float
    flux_at_zero: float


def wkb_reference(
    c: CoefficientSet,
    lam: float,
    side: Side,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
) -> WkbPrediction:
    """Leading-order large-lambda prediction of the interface values.

    Liouville normal form gives, for the left rod,
    u ~ C (rho sigma)^(-1/4) sin(sqrt(lam) * s(x)) / sqrt(lam) with phase
    s(x) = int sqrt(rho/sigma) and the amplitude C fixed by the unit initial
    slope.  Diagnostics only; never used in the solver path.
    """
    if lam < 100.0:
        raise ValueError("wkb_reference is a large-parameter diagnostic (lam >= 100)")
    tt = travel_times(c, tol)
    root = np.sqrt(lam)
    if side is Side.LEFT:
        amp = c.sigma1(-1.0) ** 0.75 / c.rho1(-1.0) ** 0.25
        rs0 = c.rho1(0.0) * c.sigma1(0.0)
        phase = root * tt.gamma1
        return WkbPrediction(
            y_at_zero=amp * rs0 ** -0.25 * np.sin(phase) / root,
            flux_at_zero=amp * rs0 ** 0.25 * np.cos(phase),
        )
    rs0 = c.rho2(0.0) * c.sigma2(0.0)
    phase = root * tt.gamma2
    if variant is BCVariant.DIRICHLET:
        amp = c.sigma2(1.0) ** 0.75 / c.rho2(1.0) ** 0.25
        return WkbPrediction(
            y_at_zero=amp * rs0 ** -0.25 * np.sin(phase) / root,
            flux_at_zero=-amp * rs0 ** 0.25 * np.cos(phase),
        )
    amp = (c.rho2(1.0) * c.sigma2(1.0)) ** 0.25
    return WkbPrediction(
        y_at_zero=amp * rs0 ** -0.25 * np.cos(phase),
        flux_at_zero=amp * rs0 ** 0.25 * root * np.sin(phase),
    )


def wkb_interface_amplitude(
    c: CoefficientSet, side: Side, variant: BCVariant, lam
) -> np.ndarray:
    """Natural scale of |y(0, lam)| used to normalize pole-proximity guards."""
    lam = np.asarray(lam, dtype=float)
    scale = np.sqrt(np.maximum(np.abs(lam), 1.0))
    if side is Side.LEFT:
        amp = c.sigma1(-1.0) ** 0.75 / c.rho1(-1.0) ** 0.25
        return amp * (c.rho1(0.0) * c.sigma1(0.0)) ** -0.25 / scale
    rs0 = (c.rho2(0.0) * c.sigma2(0.0)) ** -0.25
    if variant is BCVariant.DIRICHLET:
        amp = c.sigma2(1.0) ** 0.75 / c.rho2(1.0) ** 0.25
        return amp * rs0 / scale
    return (c.rho2(1.0) * c.sigma2(1.0)) ** 0.25 * rs0 * np.ones_like(scale)


def write_trace_csv(trace: ShootingTrace, path) -> None:
    """Dump a trace as CSV with columns x, y, flux."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "y", "flux"])
        for x, y, flux in zip(trace.grid, trace.y, trace.flux):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(flux))])
