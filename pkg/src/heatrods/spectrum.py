"""Spectrum of the coupled two-rod problem with an interface point mass.

The eigenvalues interlace with the decoupled-rod spectra: the interface
characteristic function

    F(lam) = (sigma1(0) v(0) u_x(0-) - sigma2(0) u(0) v_x(0+)) / (u(0) v(0))

is meromorphic with poles exactly at the decoupled (interface-Dirichlet)
eigenvalues and decreases strictly from +inf to -inf between consecutive
poles.  Main eigenvalues solve F(lam) = M * lam, the mass-free reference
problem solves F(lam) = 0, and coincident poles of the two rods are
themselves eigenvalues with an interface node.  This module locates all
three families, assembles normalized eigenfunctions, and certifies the
interlacing, gap and asymptote diagnostics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coefficients import BCVariant, CoefficientSet, Tolerances, TravelTimes, travel_times
from .quadrature import composite_simpson
from .shooting import (
    InterfaceBatch,
    Side,
    interface_batch,
    rod_traces,
    wkb_interface_amplitude,
    _forward_rod,
    _integrate,
)


class PoleProximityError(RuntimeError):
    """The parameter sits within pole tolerance of a decoupled eigenvalue."""


class BracketError(RuntimeError):
    """A root scan exhausted its ceiling before finding enough brackets."""


class RootRefineError(RuntimeError):
    """Root refinement failed to converge or detected a misordered bracket."""


class EigenfunctionError(RuntimeError):
    """Assembly produced a degenerate eigenfunction or a vanishing trace."""


# Coincidence detection threshold used when assembling at a given parameter
# without provenance information: both interface values below this multiple
# of their natural amplitude means the parameter is a common decoupled
# eigenvalue of the two rods.
_COINCIDENCE_VALUE_CUT = 1e-6


@dataclass(frozen=True)
class AuxiliarySpectra:
    """Decoupled-rod eigenvalue lists and their merged multiset.

    ``left`` holds the left-rod interface-Dirichlet eigenvalues, ``right``
    the right-rod list for the active variant.  ``merged`` is the sorted
    multiset union, complete at least through the index requested from
    :func:`auxiliary_spectra`; coincident members of the two lists appear as
    adjacent equal entries (canonicalized to their common refined value) and
    are marked in ``coincidence``.
    """

    variant: BCVariant
    left: np.ndarray
    right: np.ndarray
    merged: np.ndarray
    coincidence: np.ndarray

    @property
    def coincidence_indices(self) -> np.ndarray:
        return np.where(self.coincidence)[0]


@dataclass(frozen=True)
class Eigenpair:
    """One normalized eigenfunction with its interface and boundary data.

    Parts are sampled on the rod grids; ``flux_u`` and ``flux_v`` hold
    sigma * phi'.  ``trace_right`` is the boundary observation at x = 1:
    the derivative for the Dirichlet variant, the value for Neumann.
    The assembly before unit normalization is recovered as
    ``orientation * raw_norm * part``.
    """

    index: int
    lam: float
    grid_u: np.ndarray
    u_part: np.ndarray
    flux_u: np.ndarray
    grid_v: np.ndarray
    v_part: np.ndarray
    flux_v: np.ndarray
    z: float
    norm_H: float
    raw_norm: float
    orientation: float
    trace_right: float
    in_coincidence_set: bool


@dataclass(frozen=True)
class SpectralReport:
    variant: BCVariant
    travel: TravelTimes
    auxiliary: AuxiliarySpectra
    lambdas: np.ndarray
    coincidence_flags: np.ndarray
    regular: np.ndarray
    eigenvalues: list
    gaps: np.ndarray
    min_gap: float
    interpolation_ok: np.ndarray
    asymptote_ratios: np.ndarray

    @property
    def all_interpolation_ok(self) -> bool:
        return bool(np.all(self.interpolation_ok))


def _rod_endpoint(c, lams, side, variant, tol):
    """Interface values (y, flux, dy/dlam, dflux/dlam) of one rod."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    sol = _integrate(_forward_rod(c, side, variant), lams, tol)
    y, p, w, r = sol.y[:, -1].reshape(4, lams.size)
    if side is Side.LEFT:
        return y, p, w, r
    return y, -p, w, -r


def _characteristic_parts(batch: InterfaceBatch, mass: float):
    """F(lam) - mass * lam and its lambda-derivative from interface values."""
    yl, pl = batch.y_left, batch.flux_left
    yr, pr = batch.y_right, batch.flux_right
    num = pl * yr - pr * yl
    den = yl * yr
    with np.errstate(divide="ignore", invalid="ignore"):
        f = num / den
        dnum = batch.dflux_left * yr + pl * batch.dy_right \
            - batch.dflux_right * yl - pr * batch.dy_left
        dden = batch.dy_left * yr + yl * batch.dy_right
        df = (dnum * den - num * dden) / (den * den)
    return f - mass * batch.lams, df - mass


def _effective_pole_guard(tol: Tolerances) -> float:
    # the configured guard cannot act below the integrator's own error floor
    return max(tol.pole_guard, 100.0 * tol.ode_atol)


def _pole_mask(c, batch: InterfaceBatch, variant, tol: Tolerances) -> np.ndarray:
    guard = _effective_pole_guard(tol)
    amp_l = wkb_interface_amplitude(c, Side.LEFT, variant, batch.lams)
    amp_r = wkb_interface_amplitude(c, Side.RIGHT, variant, batch.lams)
    return (np.abs(batch.y_left) < guard * amp_l) | (
        np.abs(batch.y_right) < guard * amp_r
    )


def characteristic_function_batch(
    c: CoefficientSet,
    lams,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
) -> np.ndarray:
    """F(lam) for a vector of parameters; NaN where the pole guard trips."""
    tol = tol or Tolerances()
    batch = interface_batch(c, lams, variant, tol)
    f, _ = _characteristic_parts(batch, 0.0)
    f = np.where(_pole_mask(c, batch, variant, tol), np.nan, f)
    return f


def characteristic_function(
    c: CoefficientSet,
    lam: float,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
) -> float:
    """F(lam) built from the two rod IVPs; raises near a pole of F."""
    value = characteristic_function_batch(c, [lam], variant, tol)[0]
    if not np.isfinite(value):
        raise PoleProximityError(
            f"lambda = {lam} lies within pole tolerance of a decoupled eigenvalue"
        )
    return float(value)


def characteristic_derivative_quadrature(
    c: CoefficientSet,
    lam: float,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
) -> float:
    """dF/dlam from the closed form built out of rod-solution quadratures:

    F'(lam) = -[v(0)^2 int rho1 u^2 + u(0)^2 int rho2 v^2] / (u(0)^2 v(0)^2).
    """
    tol = tol or Tolerances()
    xl, yl, _, _, _ = rod_traces(c, [lam], Side.LEFT, variant, tol)
    xr, yr, _, _, _ = rod_traces(c, [lam], Side.RIGHT, variant, tol)
    u0 = yl[0, -1]
    v0 = yr[0, 0]
    guard = _effective_pole_guard(tol)
    if abs(u0) < guard * wkb_interface_amplitude(c, Side.LEFT, variant, lam) or abs(
        v0
    ) < guard * wkb_interface_amplitude(c, Side.RIGHT, variant, lam):
        raise PoleProximityError(f"lambda = {lam} lies within pole tolerance")
    i1 = composite_simpson(c.rho1(xl) * yl[0] ** 2, xl[1] - xl[0])
    i2 = composite_simpson(c.rho2(xr) * yr[0] ** 2, xr[1] - xr[0])
    return float(-(v0 * v0 * i1 + u0 * u0 * i2) / (u0 * u0 * v0 * v0))


def _refine_roots(
    batch_fn: Callable,
    lo: np.ndarray,
    hi: np.ndarray,
    sign_lo: np.ndarray,
    rtol: float,
    max_iter: int = 80,
) -> np.ndarray:
    """Bracket-safeguarded vectorized Newton refinement.

    ``batch_fn(lams)`` returns (g, dg); every bracket [lo, hi] must enclose a
    simple sign change with sign(g(lo)) = sign_lo.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    sign_lo = np.asarray(sign_lo, dtype=float)
    n = lo.size
    x = 0.5 * (lo + hi)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter):
        idx = np.where(active)[0]
        if idx.size == 0:
            break
        g, dg = batch_fn(x[idx])
        g = np.asarray(g, dtype=float)
        dg = np.asarray(dg, dtype=float)
        # tighten brackets from the fresh evaluations
        same = np.sign(g) == sign_lo[idx]
        nanmask = ~np.isfinite(g)
        lo_idx = idx[same & ~nanmask]
        hi_idx = idx[~same & ~nanmask]
        lo[lo_idx] = x[lo_idx]
        hi[hi_idx] = x[hi_idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g / dg
        x_new = x[idx] - step
        scale = rtol * (1.0 + np.abs(x[idx]))
        # a tiny Newton step means convergence even if it grazes the bracket
        done = ~nanmask & np.isfinite(step) & (
            (np.abs(step) <= scale) | (hi[idx] - lo[idx] <= scale)
        )
        bad = ~done & (
            ~np.isfinite(x_new) | (x_new <= lo[idx]) | (x_new >= hi[idx])
        )
        x_new[bad] = 0.5 * (lo[idx][bad] + hi[idx][bad])
        x[idx] = np.clip(x_new, lo[idx], hi[idx])
        active[idx[done]] = False
    if np.any(active):
        raise RootRefineError(
            f"{int(np.sum(active))} root(s) failed to converge to rtol={rtol}"
        )
    return x


def _rod_zeros(
    c: CoefficientSet,
    side: Side,
    variant: BCVariant,
    s_max: float,
    gamma_rod: float,
    tol: Tolerances,
) -> np.ndarray:
    """All zeros of the rod's interface value y(0, lam) with lam <= s_max^2.

    The scan runs uniformly in s = sqrt(lam) where consecutive zeros are
    asymptotically pi/gamma apart, with six samples per expected gap.
    """
    ds = math.pi / (6.0 * gamma_rod)
    s_grid = np.arange(0.0, s_max + ds, ds)
    lams = s_grid**2
    y, _, _, _ = _rod_endpoint(c, lams, side, variant, tol)
    signs = np.sign(y)
    if signs[0] == 0.0:
        raise RootRefineError(f"{side.value} rod: interface value vanished at lam=0")
    flips = np.where(signs[:-1] * signs[1:] < 0.0)[0]
    if flips.size == 0:
        return np.empty(0)

    def batch_fn(ls):
        yv, _, dyv, _ = _rod_endpoint(c, ls, side, variant, tol)
        return yv, dyv

    roots = _refine_roots(
        batch_fn,
        lo=lams[flips],
        hi=lams[flips + 1],
        sign_lo=signs[flips],
        rtol=tol.root_rtol,
    )
    if np.any(np.diff(roots) <= 0):
        raise RootRefineError(f"{side.value} rod: refined zeros are not increasing")
    return roots


def auxiliary_spectra(
    c: CoefficientSet,
    variant: BCVariant = BCVariant.DIRICHLET,
    n_max: int = 10,
    tol: Tolerances | None = None,
    travel: TravelTimes | None = None,
) -> AuxiliarySpectra:
    """Decoupled-rod spectra with the merged multiset complete through n_max.

    Zeros of u(0, .) give the left list; zeros of v(0, .) the right list
    (interface-Dirichlet at x = 0, with the variant's condition at x = 1).
    Coincidences within the relative tolerance are canonicalized to one
    common value occupying two adjacent merged slots.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    tol = tol or Tolerances()
    tt = travel or travel_times(c, tol)
    s_max = 1.2 * (n_max + 2) * math.pi / tt.total
    left = right = None
    for _ in range(4):
        left = _rod_zeros(c, Side.LEFT, variant, s_max, tt.gamma1, tol)
        right = _rod_zeros(c, Side.RIGHT, variant, s_max, tt.gamma2, tol)
        if left.size + right.size >= n_max + 1:
            break
        s_max *= 1.4
    else:
        raise BracketError(
            f"scan ceiling too low: found {left.size + right.size} decoupled "
            f"eigenvalues, need {n_max + 1}"
        )

    labeled = sorted(
        [(v, 0) for v in left] + [(v, 1) for v in right], key=lambda t: t[0]
    )
    values = np.array([t[0] for t in labeled])
    origins = np.array([t[1] for t in labeled])
    coincidence = np.zeros(values.size, dtype=bool)
    i = 0
    while i < values.size - 1:
        ctol = tol.coincidence_rtol * (1.0 + values[i])
        if origins[i] != origins[i + 1] and values[i + 1] - values[i] <= ctol:
            common = 0.5 * (values[i] + values[i + 1])
            values[i] = values[i + 1] = common
            coincidence[i] = coincidence[i + 1] = True
            i += 2
        else:
            i += 1
    return AuxiliarySpectra(
        variant=variant, left=left, right=right, merged=values,
        coincidence=coincidence,
    )


def _main_batch_fn(c, variant, mass, tol):
    def batch_fn(lams):
        batch = interface_batch(c, lams, variant, tol)
        g, dg = _characteristic_parts(batch, mass)
        mask = _pole_mask(c, batch, variant, tol)
        g[mask] = np.nan
        dg[mask] = np.nan
        return g, dg

    return batch_fn


def _validated_endpoints(batch_fn, points, fixed, other_end, want_positive):
    """Shrink endpoint insets toward their pole until g has the right sign."""
    points = points.copy()
    for _ in range(10):
        idx = np.where(~fixed)[0]
        if idx.size == 0:
            break
        g, _ = batch_fn(points[idx])
        ok = np.isfinite(g) & ((g > 0.0) if want_positive else (g < 0.0))
        fixed[idx[ok]] = True
        bad = idx[~ok]
        # move 25x closer to the pole end
        points[bad] = other_end[bad] + 0.04 * (points[bad] - other_end[bad])
    if not np.all(fixed):
        raise RootRefineError(
            "could not validate bracket endpoint signs next to a pole "
            "(possible pole misclassification)"
        )
    return points


def eigenvalues_with_flags(
    c: CoefficientSet,
    variant: BCVariant = BCVariant.DIRICHLET,
    n_max: int = 10,
    tol: Tolerances | None = None,
    aux: AuxiliarySpectra | None = None,
    mass: float | None = None,
):
    """First n_max eigenvalues plus per-index interface-node (coincidence) flags."""
    tol = tol or Tolerances()
    if aux is None:
        aux = auxiliary_spectra(c, variant, n_max + 1, tol)
    mu = aux.merged
    if mu.size < n_max:
        raise BracketError(
            f"auxiliary spectra cover {mu.size} members, need {n_max}"
        )
    mass_value = c.mass if mass is None else float(mass)
    batch_fn = _main_batch_fn(c, variant, mass_value, tol)

    lams = np.empty(n_max)
    flags = np.zeros(n_max, dtype=bool)
    lo_list, hi_list, out_idx = [], [], []
    for i in range(n_max):
        if i == 0:
            lo_list.append(0.0)
            hi_list.append(mu[0])
            out_idx.append(0)
            continue
        if mu[i] == mu[i - 1] and aux.coincidence[i]:
            lams[i] = mu[i]
            flags[i] = True
            continue
        lo_list.append(mu[i - 1])
        hi_list.append(mu[i])
        out_idx.append(i)

    lo = np.array(lo_list)
    hi = np.array(hi_list)
    widths = hi - lo
    a = lo + 1e-3 * widths
    a[0] = 0.0  # the head interval starts away from any pole
    b = hi - 1e-3 * widths

    fixed_a = np.zeros(a.size, dtype=bool)
    fixed_a[0] = False
    a = _validated_endpoints(batch_fn, a, fixed_a, lo, want_positive=True)
    b = _validated_endpoints(
        batch_fn, b, np.zeros(b.size, dtype=bool), hi, want_positive=False
    )

    roots = _refine_roots(
        batch_fn, lo=a, hi=b, sign_lo=np.ones(a.size), rtol=tol.root_rtol
    )
    lams[np.array(out_idx)] = roots
    if np.any(np.diff(lams) <= 0) or lams[0] <= 0:
        raise RootRefineError(
            "computed eigenvalues are not strictly increasing and positive "
            "(pole misclassification suspected)"
        )
    return lams, flags, aux


def eigenvalues_main(
    c: CoefficientSet,
    variant: BCVariant = BCVariant.DIRICHLET,
    n_max: int = 10,
    tol: Tolerances | None = None,
    aux: AuxiliarySpectra | None = None,
) -> np.ndarray:
    """Eigenvalues of the coupled problem: one root of F(lam) = M lam per pole gap."""
    lams, _, _ = eigenvalues_with_flags(c, variant, n_max, tol, aux)
    return lams


def eigenvalues_regular(
    c: CoefficientSet,
    variant: BCVariant = BCVariant.DIRICHLET,
    n_max: int = 10,
    tol: Tolerances | None = None,
    aux: AuxiliarySpectra | None = None,
) -> np.ndarray:
    """Eigenvalues of the mass-free reference problem (roots of F)."""
    lams, _, _ = eigenvalues_with_flags(c, variant, n_max, tol, aux, mass=0.0)
    return lams


def assemble_eigenfunctions(
    c: CoefficientSet,
    lams,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
    flags=None,
    first_index: int = 1,
    n_grid: int | None = None,
) -> list:
    """Normalized eigenfunctions for a vector of refined eigenvalues.

    Away from a coincidence the two pieces are matched through the opposite
    rod's interface value (scaled by sqrt(lam)); at a coincidence both
    interface values vanish and the pieces are matched through the interface
    fluxes instead.  Output is unit-norm with the u-part slope at x = -1
    positive.
    """
    tol = tol or Tolerances()
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    xl, yl, fl, _, _ = rod_traces(c, lams, Side.LEFT, variant, tol, n_grid)
    xr, yr, fr, _, _ = rod_traces(c, lams, Side.RIGHT, variant, tol, n_grid)
    dxl = xl[1] - xl[0]
    dxr = xr[1] - xr[0]
    rho_l = c.rho1(xl)
    rho_r = c.rho2(xr)
    sigma2_1 = c.sigma2(1.0)
    amp_l = wkb_interface_amplitude(c, Side.LEFT, variant, lams)
    amp_r = wkb_interface_amplitude(c, Side.RIGHT, variant, lams)

    pairs = []
    for i, lam in enumerate(lams):
        u0 = yl[i, -1]
        v0 = yr[i, 0]
        if flags is not None and flags[i] is not None:
            coincident = bool(flags[i])
        else:
            coincident = (
                abs(u0) < _COINCIDENCE_VALUE_CUT * amp_l[i]
                and abs(v0) < _COINCIDENCE_VALUE_CUT * amp_r[i]
            )
        if coincident:
            cu = fr[i, 0]   # sigma2(0) v_x(0+)
            cv = fl[i, -1]  # sigma1(0) u_x(0-)
            # interface fluxes scale like amp * sqrt(lam * rho * sigma)
            flux_scale_r = amp_r[i] * math.sqrt(lam * c.rho2(0.0) * c.sigma2(0.0))
            flux_scale_l = amp_l[i] * math.sqrt(lam * c.rho1(0.0) * c.sigma1(0.0))
            degenerate = (
                abs(cu) < 1e-8 * flux_scale_r and abs(cv) < 1e-8 * flux_scale_l
            )
        else:
            root = math.sqrt(lam)
            cu = root * v0
            cv = root * u0
            degenerate = (
                abs(v0) < 1e-8 * amp_r[i] and abs(u0) < 1e-8 * amp_l[i]
            )
        if degenerate:
            raise EigenfunctionError(
                f"both pieces vanish at lam={lam}; the parameter looks "
                "misclassified with respect to the decoupled spectra"
            )
        phi_u = cu * yl[i]
        phi_u_flux = cu * fl[i]
        phi_v = cv * yr[i]
        phi_v_flux = cv * fr[i]
        z = 0.5 * (phi_u[-1] + phi_v[0])
        norm_sq = (
            composite_simpson(rho_l * phi_u**2, dxl)
            + composite_simpson(rho_r * phi_v**2, dxr)
            + c.mass * z * z
        )
        if norm_sq <= 0.0 or not np.isfinite(norm_sq):
            raise EigenfunctionError(
                f"assembly at lam={lam} produced a degenerate eigenfunction"
            )
        raw_norm = math.sqrt(norm_sq)
        orientation = 1.0 if cu > 0 else -1.0
        scale = orientation / raw_norm
        phi_u = scale * phi_u
        phi_u_flux = scale * phi_u_flux
        phi_v = scale * phi_v
        phi_v_flux = scale * phi_v_flux
        z = scale * z
        norm_check = (
            composite_simpson(rho_l * phi_u**2, dxl)
            + composite_simpson(rho_r * phi_v**2, dxr)
            + c.mass * z * z
        )
        if variant is BCVariant.DIRICHLET:
            trace = phi_v_flux[-1] / sigma2_1
        else:
            trace = phi_v[-1]
        if abs(trace) < 1e-10:
            raise EigenfunctionError(
                f"boundary observation vanished for eigenvalue {lam}: "
                f"trace = {trace:.3e}"
            )
        pairs.append(
            Eigenpair(
                index=first_index + i,
                lam=float(lam),
                grid_u=xl, u_part=phi_u, flux_u=phi_u_flux,
                grid_v=xr, v_part=phi_v, flux_v=phi_v_flux,
                z=float(z),
                norm_H=float(math.sqrt(norm_check)),
                raw_norm=float(raw_norm),
                orientation=orientation,
                trace_right=float(trace),
                in_coincidence_set=coincident,
            )
        )
    return pairs


def assemble_eigenfunction(
    c: CoefficientSet,
    lam: float,
    variant: BCVariant = BCVariant.DIRICHLET,
    tol: Tolerances | None = None,
    in_coincidence: bool | None = None,
    index: int = 1,
    n_grid: int | None = None,
) -> Eigenpair:
    return assemble_eigenfunctions(
        c, [lam], variant, tol, flags=[in_coincidence], first_index=index,
        n_grid=n_grid,
    )[0]


def _near_coincidence_flags(aux: AuxiliarySpectra, flags: np.ndarray) -> list:
    """Upgrade eigenvalue flags where the surrounding pole gap nearly closes.

    Between nearly coincident poles both interface values degrade; the
    interface-flux assembly stays well conditioned there, so it is used as
    soon as the gap drops below 1e-4 even though the pair is still resolved.
    """
    mu = aux.merged
    out = []
    for i, flag in enumerate(flags):
        if flag:
            out.append(True)
            continue
        if i >= 1 and i < mu.size and (mu[i] - mu[i - 1]) < 1e-4:
            out.append(None)  # let the value-based detection decide
        else:
            out.append(False)
    return out


def spectral_report(
    c: CoefficientSet,
    variant: BCVariant = BCVariant.DIRICHLET,
    n_max: int = 10,
    tol: Tolerances | None = None,
    n_eigenfunctions: int | None = None,
    travel: TravelTimes | None = None,
) -> SpectralReport:
    """Full spectral certification: eigenvalues, gaps, interlacing, asymptotes."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    tol = tol or Tolerances()
    tt = travel or travel_times(c, tol)
    aux = auxiliary_spectra(c, variant, n_max + 1, tol, travel=tt)
    lams, flags, _ = eigenvalues_with_flags(c, variant, n_max, tol, aux)
    regular, _, _ = eigenvalues_with_flags(c, variant, n_max, tol, aux, mass=0.0)

    mu = aux.merged
    interpolation = np.zeros(n_max, dtype=bool)
    for i in range(n_max):
        ctol = tol.coincidence_rtol * (1.0 + lams[i])
        if i == 0:
            interpolation[0] = lams[0] < regular[0] < mu[0]
        elif flags[i]:
            interpolation[i] = (
                abs(lams[i] - mu[i - 1]) <= ctol and abs(regular[i] - mu[i - 1]) <= ctol
            )
        else:
            interpolation[i] = mu[i - 1] < lams[i] < regular[i] < mu[i]

    gaps = np.diff(lams)
    indices = np.arange(1, n_max + 1, dtype=float)
    if variant is BCVariant.DIRICHLET:
        ratios = lams * tt.total**2 / (indices * math.pi) ** 2
    else:
        ratios = lams * 4.0 * tt.total**2 / ((2.0 * indices + 1.0) * math.pi) ** 2

    n_eig = n_max if n_eigenfunctions is None else min(n_eigenfunctions, n_max)
    eigenpairs = []
    if n_eig > 0:
        eigenpairs = assemble_eigenfunctions(
            c, lams[:n_eig], variant, tol,
            flags=_near_coincidence_flags(aux, flags)[:n_eig],
        )

    return SpectralReport(
        variant=variant,
        travel=tt,
        auxiliary=aux,
        lambdas=lams,
        coincidence_flags=flags,
        regular=regular,
        eigenvalues=eigenpairs,
        gaps=gaps,
        min_gap=float(np.min(gaps)) if gaps.size else float("nan"),
        interpolation_ok=interpolation,
        asymptote_ratios=ratios,
    )


def write_spectrum_csv(report: SpectralReport, path) -> None:
    """Plot-ready summary: n, lambda, regular_lambda, mu, gap, interpolation_ok, asymptote_ratio."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["n", "lambda", "regular_lambda", "mu", "gap", "interpolation_ok",
             "asymptote_ratio"]
        )
        n_max = report.lambdas.size
        for i in range(n_max):
            gap = repr(float(report.gaps[i])) if i < report.gaps.size else ""
            writer.writerow(
                [
                    i + 1,
                    repr(float(report.lambdas[i])),
                    repr(float(report.regular[i])),
                    repr(float(report.auxiliary.merged[i]))
                    if i < report.auxiliary.merged.size
                    else "",
                    gap,
                    int(report.interpolation_ok[i]),
                    repr(float(report.asymptote_ratios[i])),
                ]
            )


def write_eigenfunction_csv(pair: Eigenpair, path) -> None:
    """One eigenfunction as CSV rows (x, value, piece)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "value", "piece"])
        for x, v in zip(pair.grid_u, pair.u_part):
            writer.writerow([repr(float(x)), repr(float(v)), "left"])
        for x, v in zip(pair.grid_v, pair.v_part):
            writer.writerow([repr(float(x)), repr(float(v)), "right"])
