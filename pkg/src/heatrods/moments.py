"""Truncated moment problem for null control and biorthogonal synthesis.

Null control of the first N modes reduces to prescribing the integrals of
w(t) = h(T - t) against the decaying exponentials exp(-lam_n t).  The
minimal-L2-norm solution lives in the span of those exponentials; its
coefficients solve a Gram system whose entries are available in closed form,

    G[n, m] = (1 - exp(-(lam_n + lam_m) T)) / (lam_n + lam_m).

The Gram matrix of clustered decaying exponentials is severely
ill-conditioned, so the solve runs through a diagonally pivoted Cholesky
factorization with a certified condition estimate and an arbitrary-precision
fallback once double precision can no longer deliver the residual target.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath as mp
import numpy as np

from .coefficients import BCVariant, CoefficientSet
from .quadrature import composite_simpson


class ConditioningError(RuntimeError):
    """Gram conditioning exceeded the configured ceiling.

    Reduce the number of modes or enable the extended-precision path.
    """

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class GridMismatchError(ValueError):
    """State samples do not live on the eigenfunction grids."""


class MomentResidualError(RuntimeError):
    """A synthesized control failed to reproduce its moment targets."""


@dataclass(frozen=True)
class MomentProblem:
    """Targets d_n with int_0^T w(t) exp(-lam_n t) dt = d_n.

    For unit-norm eigenfunctions the Dirichlet targets are
    d_n = + Y_n0 exp(-lam_n T) / (sigma2(1) * trace_n) and the Neumann ones
    carry a leading minus sign; the sign is fixed here, never in synthesis.
    """

    horizon: float
    exponents: np.ndarray
    initial_coefficients: np.ndarray
    targets: np.ndarray
    variant: BCVariant

    def __post_init__(self):
        if self.exponents.size < 1:
            raise ValueError("moment problem needs at least one mode")
        if np.any(self.exponents <= 0) or np.any(np.diff(self.exponents) <= 0):
            raise ValueError("exponents must be strictly increasing and positive")


@dataclass(frozen=True)
class BiorthogonalFamily:
    """Minimal-norm biorthogonal family within span{exp(-lam_m t)}.

    theta_n(t) = sum_m coefficients[n, m] exp(-lam_m t).  When the solve ran
    in extended precision, ``mp_coefficients`` holds the full-precision matrix
    and ``residual_max`` measures the biorthogonality defect of that
    representation; otherwise it measures the double-precision one.
    """

    horizon: float
    exponents: np.ndarray
    coefficients: np.ndarray
    gram_condition: float
    norms: np.ndarray
    residual_max: float
    precision_used: str
    mp_coefficients: list | None = field(default=None, repr=False)


@dataclass(frozen=True)
class ControlSignal:
    """Sampled boundary control h(t) = w(T - t) with its synthesis metadata.

    ``series_coefficients`` give the exact exponential representation
    w(t) = sum_m beta_m exp(-lam_m t) used by consumers that need more
    accuracy than the samples carry.
    """

    times: np.ndarray
    w: np.ndarray
    h: np.ndarray
    horizon: float
    exponents: np.ndarray
    series_coefficients: np.ndarray
    targets: np.ndarray
    moment_residuals: np.ndarray
    diagnostics: dict


def project_initial_data(y0, eigenpairs: Sequence, c: CoefficientSet) -> np.ndarray:
    """Coefficients <Y0, phi_n> in the weighted inner product.

    ``y0`` must expose u, v and z sampled on the eigenfunction grids.
    """
    if not eigenpairs:
        return np.zeros(0)
    ref = eigenpairs[0]
    u = np.asarray(y0.u, dtype=float)
    v = np.asarray(y0.v, dtype=float)
    if u.shape != ref.grid_u.shape or v.shape != ref.grid_v.shape:
        raise GridMismatchError(
            f"state samples ({u.size}, {v.size}) do not match the eigenfunction "
            f"grids ({ref.grid_u.size}, {ref.grid_v.size})"
        )
    dxu = ref.grid_u[1] - ref.grid_u[0]
    dxv = ref.grid_v[1] - ref.grid_v[0]
    rho_u = c.rho1(ref.grid_u) * u
    rho_v = c.rho2(ref.grid_v) * v
    out = np.empty(len(eigenpairs))
    for i, pair in enumerate(eigenpairs):
        out[i] = (
            composite_simpson(rho_u * pair.u_part, dxu)
            + composite_simpson(rho_v * pair.v_part, dxv)
            + c.mass * float(y0.z) * pair.z
        )
    return out


def make_moment_problem(
    y0_coefficients,
    eigenpairs: Sequence,
    c: CoefficientSet,
    horizon: float,
    variant: BCVariant,
) -> MomentProblem:
    coeffs = np.asarray(y0_coefficients, dtype=float)
    if coeffs.size != len(eigenpairs):
        raise ValueError("one coefficient per eigenpair required")
    lams = np.array([p.lam for p in eigenpairs])
    traces = np.array([p.trace_right for p in eigenpairs])
    sigma2_1 = c.sigma2(1.0)
    sign = 1.0 if variant is BCVariant.DIRICHLET else -1.0
    targets = sign * coeffs * np.exp(-lams * horizon) / (sigma2_1 * traces)
    return MomentProblem(
        horizon=float(horizon),
        exponents=lams,
        initial_coefficients=coeffs,
        targets=targets,
        variant=variant,
    )


def exponential_gram(exponents, horizon: float) -> np.ndarray:
    """Closed-form Gram matrix of {exp(-lam_n t)} on [0, horizon]."""
    lams = np.asarray(exponents, dtype=float)
    s = lams[:, None] + lams[None, :]
    return -np.expm1(-s * horizon) / s


def _pivoted_cholesky(a_rows, sqrt_fn, zero):
    """Diagonally pivoted Cholesky on a mutable row-list matrix.

    Returns (rows holding L in the lower triangle, permutation) or raises
    ArithmeticError at the first non-positive pivot.
    """
    n = len(a_rows)
    perm = list(range(n))
    a = [list(row) for row in a_rows]
    for k in range(n):
        p = max(range(k, n), key=lambda j: a[j][j])
        if p != k:
            a[k], a[p] = a[p], a[k]
            for row in a:
                row[k], row[p] = row[p], row[k]
            perm[k], perm[p] = perm[p], perm[k]
        d = a[k][k]
        if not d > zero:
            raise ArithmeticError(f"non-positive pivot at column {k}")
        root = sqrt_fn(d)
        a[k][k] = root
        for i in range(k + 1, n):
            a[i][k] = a[i][k] / root
        # keep the trailing block symmetric so later pivot swaps stay valid
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i = a[i]
            for j in range(k + 1, n):
                row_i[j] -= aik * a[j][k]
    return a, perm


def _cholesky_inverse(l_rows, perm, one, zero):
    """Inverse of the factored matrix, undoing the pivoting permutation."""
    n = len(l_rows)
    inv_perm = [0] * n
    for i, p in enumerate(perm):
        inv_perm[p] = i
    cols = []
    for col in range(n):
        b = [zero] * n
        b[inv_perm[col]] = one
        # forward solve L y = b
        y = [zero] * n
        for i in range(n):
            s = b[i]
            for j in range(i):
                s -= l_rows[i][j] * y[j]
            y[i] = s / l_rows[i][i]
        # backward solve L^T x = y
        x = [zero] * n
        for i in reversed(range(n)):
            s = y[i]
            for j in range(i + 1, n):
                s -= l_rows[j][i] * x[j]
            x[i] = s / l_rows[i][i]
        cols.append([x[inv_perm[i]] for i in range(n)])
    # cols[j][i] = (A^-1)[i][j]; symmetric input, but transpose for clarity
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def _norm1(rows) -> float:
    return float(max(sum(abs(v) for v in col) for col in zip(*rows)))


def _gram_mp(exponents, horizon):
    n = len(exponents)
    lams = [mp.mpf(float(v)) for v in exponents]
    t = mp.mpf(float(horizon))
    return [
        [-mp.expm1(-(lams[i] + lams[j]) * t) / (lams[i] + lams[j]) for j in range(n)]
        for i in range(n)
    ]


def _residual_mp(exponents, horizon, coeff_rows, dps: int = 50) -> float:
    """max |G C - I| evaluated in arbitrary precision for any C representation."""
    with mp.workdps(dps):
        g = _gram_mp(exponents, horizon)
        n = len(g)
        worst = mp.mpf(0)
        for i in range(n):
            for j in range(n):
                s = mp.mpf(0)
                for k in range(n):
                    s += g[i][k] * mp.mpf(coeff_rows[k][j])
                target = 1 if i == j else 0
                worst = max(worst, abs(s - target))
        return float(worst)


def build_biorthogonal(
    exponents,
    horizon: float,
    precision: str = "auto",
    condition_ceiling: float = 1e14,
    residual_tol: float = 1e-9,
) -> BiorthogonalFamily:
    """Biorthogonal family to {exp(-lam_n t)} with minimal L2 norms.

    ``precision`` is one of "double", "extended" or "auto".  Double solves
    through pivoted Cholesky in float64 and fails once the certified
    condition estimate exceeds ``condition_ceiling``; auto escalates to the
    extended path when the measured biorthogonality residual misses
    ``residual_tol``.
    """
    lams = np.asarray(exponents, dtype=float)
    if lams.size < 1:
        raise ValueError("need at least one exponent")
    if np.any(lams <= 0) or (lams.size > 1 and np.any(np.diff(lams) <= 0)):
        raise ValueError("exponents must be strictly increasing and positive")
    if precision not in ("double", "extended", "auto"):
        raise ValueError(f"unknown precision mode {precision!r}")
    horizon = float(horizon)

    if precision in ("double", "auto"):
        g = exponential_gram(lams, horizon)
        try:
            l_rows, perm = _pivoted_cholesky(g.tolist(), math.sqrt, 0.0)
        except ArithmeticError as exc:
            if precision == "double":
                raise ConditioningError(
                    f"Gram factorization broke down in double precision ({exc}); "
                    "reduce the number of modes or enable extended precision"
                ) from exc
            l_rows = None
        if l_rows is not None:
            inv = _cholesky_inverse(l_rows, perm, 1.0, 0.0)
            coeffs = np.array(inv)
            condition = _norm1(g.tolist()) * _norm1(inv)
            if condition > condition_ceiling:
                if precision == "double":
                    raise ConditioningError(
                        f"Gram condition estimate {condition:.3e} exceeds the ceiling "
                        f"{condition_ceiling:.1e}; reduce the number of modes or "
                        "enable extended precision",
                        condition=condition,
                    )
            else:
                residual = _residual_mp(lams, horizon, coeffs.tolist())
                if residual <= residual_tol or precision == "double":
                    return BiorthogonalFamily(
                        horizon=horizon,
                        exponents=lams,
                        coefficients=coeffs,
                        gram_condition=condition,
                        norms=np.sqrt(np.maximum(np.diag(coeffs), 0.0)),
                        residual_max=residual,
                        precision_used="double",
                    )
        elif precision == "double":  # unreachable, kept for clarity
            raise ConditioningError("double-precision factorization failed")

    # extended-precision path (>= 30 significant digits, grown as needed)
    dps = 50
    last_condition = float("inf")
    for _ in range(4):
        with mp.workdps(dps):
            g_mp = _gram_mp(lams, horizon)
            try:
                l_rows, perm = _pivoted_cholesky(g_mp, mp.sqrt, mp.mpf(0))
            except ArithmeticError:
                dps *= 2
                continue
            inv = _cholesky_inverse(l_rows, perm, mp.mpf(1), mp.mpf(0))
            condition = _norm1(g_mp) * _norm1(inv)
            last_condition = float(condition)
            needed = int(mp.log10(condition)) + 25 if condition > 0 else 25
        if needed > dps:
            dps = max(needed, 2 * dps)
            continue
        residual = _residual_mp(lams, horizon, inv, dps=dps)
        if residual > residual_tol:
            dps *= 2
            continue
        coeffs = np.array([[float(v) for v in row] for row in inv])
        return BiorthogonalFamily(
            horizon=horizon,
            exponents=lams,
            coefficients=coeffs,
            gram_condition=last_condition,
            norms=np.sqrt(np.maximum(np.diag(coeffs), 0.0)),
            residual_max=residual,
            precision_used=f"extended({dps})",
            mp_coefficients=inv,
        )
    raise ConditioningError(
        f"Gram condition ~{last_condition:.3e} defeated the extended-precision "
        "path; reduce the number of modes",
        condition=last_condition,
    )


def moment_integrals(beta, exponents, horizon: float) -> np.ndarray:
    """Exact integrals int_0^T (sum_m beta_m e^(-lam_m t)) e^(-lam_n t) dt."""
    return exponential_gram(exponents, horizon) @ np.asarray(beta, dtype=float)


def synthesize_control(
    problem: MomentProblem,
    family: BiorthogonalFamily,
    n_time: int = 2049,
    residual_tol: float | None = None,
    check: bool = True,
) -> ControlSignal:
    """Control w(t) = sum_n d_n theta_n(t), h(t) = w(T - t), with residuals.

    Residuals are the achieved moments minus the targets, evaluated through
    the exact exponential integrals of the synthesized series.
    """
    if family.exponents.size != problem.exponents.size or not np.allclose(
        family.exponents, problem.exponents, rtol=1e-12, atol=0.0
    ):
        raise ValueError("biorthogonal family does not cover the problem exponents")
    if abs(family.horizon - problem.horizon) > 1e-12 * max(1.0, problem.horizon):
        raise ValueError("family and problem horizons differ")

    d = problem.targets
    if family.mp_coefficients is not None:
        with mp.workdps(60):
            n = d.size
            beta = np.array(
                [
                    float(
                        mp.fsum(
                            family.mp_coefficients[k][m] * mp.mpf(float(d[k]))
                            for k in range(n)
                        )
                    )
                    for m in range(n)
                ]
            )
    else:
        beta = family.coefficients.T @ d

    times = np.linspace(0.0, problem.horizon, n_time)
    w = np.exp(-np.outer(times, problem.exponents)) @ beta
    h = np.exp(-np.outer(problem.horizon - times, problem.exponents)) @ beta
    residuals = moment_integrals(beta, problem.exponents, problem.horizon) - d

    tol = residual_tol if residual_tol is not None else 1e-7
    bound = tol * max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
    if check and np.max(np.abs(residuals), initial=0.0) > bound:
        raise MomentResidualError(
            f"moment residual {np.max(np.abs(residuals)):.3e} exceeds {bound:.3e}"
        )
    diagnostics = {
        "gram_condition": family.gram_condition,
        "theta_norms": family.norms.tolist(),
        "precision_used": family.precision_used,
        "biorthogonality_residual": family.residual_max,
        "control_l2_norm": float(
            math.sqrt(max(float(beta @ exponential_gram(problem.exponents, problem.horizon) @ beta), 0.0))
        ),
    }
    return ControlSignal(
        times=times,
        w=w,
        h=h,
        horizon=problem.horizon,
        exponents=problem.exponents,
        series_coefficients=beta,
        targets=d,
        moment_residuals=residuals,
        diagnostics=diagnostics,
    )


def sampled_control(times, h, horizon: float | None = None) -> ControlSignal:
    """Wrap externally supplied control samples (no exponential series)."""
    times = np.asarray(times, dtype=float)
    h = np.asarray(h, dtype=float)
    if times.ndim != 1 or times.shape != h.shape or times.size < 2:
        raise ValueError("need matching 1-d time and value arrays")
    if np.any(np.diff(times) <= 0):
        raise ValueError("control times must be strictly increasing")
    span = horizon if horizon is not None else float(times[-1])
    return ControlSignal(
        times=times,
        w=h[::-1].copy(),
        h=h,
        horizon=span,
        exponents=np.zeros(0),
        series_coefficients=np.zeros(0),
        targets=np.zeros(0),
        moment_residuals=np.zeros(0),
        diagnostics={},
    )


def write_control_csv(signal: ControlSignal, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "w", "h"])
        for t, w, h in zip(signal.times, signal.w, signal.h):
            writer.writerow([repr(float(t)), repr(float(w)), repr(float(h))])


def write_moments_json(
    problem: MomentProblem, family: BiorthogonalFamily, signal: ControlSignal, path
) -> None:
    payload = {
        "variant": problem.variant.value,
        "horizon": problem.horizon,
        "exponents": problem.exponents.tolist(),
        "initial_coefficients": problem.initial_coefficients.tolist(),
        "targets": problem.targets.tolist(),
        "residuals": signal.moment_residuals.tolist(),
        "gram_condition": family.gram_condition,
        "theta_norms": family.norms.tolist(),
        "precision_used": family.precision_used,
        "biorthogonality_residual": family.residual_max,
        "control_l2_norm": signal.diagnostics.get("control_l2_norm"),
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
