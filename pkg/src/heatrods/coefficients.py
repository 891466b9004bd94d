"""Problem data: rod coefficients, point mass, boundary variant and config I/O.

The two rods occupy [-1, 0] and [0, 1].  Each rod carries a density ``rho``,
a conductivity ``sigma`` and a potential ``q``; the rods are joined at x = 0
by a point mass.  Coefficients come from a config file either as expression
strings in a small arithmetic grammar or as sampled tables interpolated by
natural cubic splines.
"""

from __future__ import annotations

import bisect
import enum
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
import yaml
from scipy.interpolate import CubicSpline

from .expressions import ExpressionError, compile_derivative, compile_expression
from .quadrature import adaptive_simpson

logger = logging.getLogger(__name__)

POSITIVITY_SAMPLES = 1001
MIN_TABLE_POINTS = 64


class ConfigError(ValueError):
    """Invalid configuration: parse failure, bad field or violated invariant."""


class BCVariant(enum.Enum):
    """Which boundary input acts at x = 1."""

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


def _fast_ppoly(ppoly) -> Callable:
    """Low-overhead piecewise-polynomial evaluation (scalar and array).

    PPoly.__call__ costs tens of microseconds per scalar, which dominates the
    shooting right-hand side; bisect plus Horner on plain floats does not.
    """
    breaks = ppoly.x
    coeffs = ppoly.c
    n_seg = coeffs.shape[1]
    order = coeffs.shape[0]
    breaks_list = [float(v) for v in breaks]
    cols = [tuple(float(coeffs[k, j]) for k in range(order)) for j in range(n_seg)]
    last = n_seg - 1

    def evaluate(x):
        if isinstance(x, np.ndarray):
            idx = np.clip(np.searchsorted(breaks, x, side="right") - 1, 0, last)
            dx = x - breaks[idx]
            out = coeffs[0, idx]
            for k in range(1, order):
                out = out * dx + coeffs[k, idx]
            return out
        j = bisect.bisect_right(breaks_list, x) - 1
        if j < 0:
            j = 0
        elif j > last:
            j = last
        col = cols[j]
        dx = x - breaks_list[j]
        out = col[0]
        for k in range(1, order):
            out = out * dx + col[k]
        return out

    return evaluate


@dataclass(frozen=True)
class Tolerances:
    """Solver tolerance bundle, overridable from the config file."""

    ode_rtol: float = 1e-11
    ode_atol: float = 1e-11
    root_rtol: float = 1e-12
    quad_rtol: float = 1e-10
    quad_atol: float = 1e-10
    coincidence_rtol: float = 1e-7
    pole_guard: float = 1e-13
    gram_condition_ceiling: float = 1e14
    moment_residual: float = 1e-7
    grid_points: int = 2049

    @classmethod
    def from_mapping(cls, data: dict, where: str = "tolerances") -> "Tolerances":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")
        kwargs = {}
        for key, value in data.items():
            if key == "grid_points":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        tol = cls(**kwargs)
        if tol.grid_points < 3 or tol.grid_points % 2 == 0:
            raise ConfigError("tolerances.grid_points must be odd and >= 3")
        return tol


@dataclass(frozen=True)
class Coefficient:
    """One positive coefficient function on a closed interval.

    Backed either by a parsed expression or by a natural cubic spline through
    a sampled table; both carry two continuous derivatives on the interval.
    """

    source: object
    interval: tuple[float, float]
    _eval: Callable = field(repr=False, compare=False)
    _deriv: Callable = field(repr=False, compare=False)

    @classmethod
    def from_expression(cls, source: str, interval: tuple[float, float]) -> "Coefficient":
        try:
            ev = compile_expression(source)
            dv = compile_derivative(source)
        except ExpressionError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(source=source, interval=interval, _eval=ev, _deriv=dv)

    @classmethod
    def from_table(
        cls, xs, ys, interval: tuple[float, float], where: str = "coefficient"
    ) -> "Coefficient":
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ConfigError(f"{where}: table needs matching 1-d x and y arrays")
        if xs.size < MIN_TABLE_POINTS:
            raise ConfigError(
                f"{where}: sampled table needs at least {MIN_TABLE_POINTS} points, got {xs.size}"
            )
        if np.any(np.diff(xs) <= 0):
            raise ConfigError(f"{where}: table x values must be strictly increasing")
        lo, hi = interval
        if abs(xs[0] - lo) > 1e-12 or abs(xs[-1] - hi) > 1e-12:
            raise ConfigError(f"{where}: table must cover [{lo}, {hi}] exactly")
        spline = CubicSpline(xs, ys, bc_type="natural")
        source = {"x": [float(v) for v in xs], "y": [float(v) for v in ys]}
        return cls(
            source=source,
            interval=interval,
            _eval=_fast_ppoly(spline),
            _deriv=_fast_ppoly(spline.derivative()),
        )

    def __call__(self, x):
        out = self._eval(x)
        if isinstance(x, np.ndarray):
            return np.asarray(out, dtype=float)
        return float(out)

    def deriv(self, x):
        out = self._deriv(x)
        if isinstance(x, np.ndarray):
            return np.asarray(out, dtype=float)
        return float(out)


@dataclass(frozen=True)
class CoefficientSet:
    """The six rod coefficients plus the interface mass."""

    rho1: Coefficient
    sigma1: Coefficient
    q1: Coefficient
    rho2: Coefficient
    sigma2: Coefficient
    q2: Coefficient
    mass: float

    def validate(self) -> None:
        """Check positivity invariants by dense sampling (1001 points per rod).

        Table-backed coefficients are additionally checked at their own
        sample points, which the uniform grid need not hit.
        """
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise ConfigError(f"mass must be a positive real, got {self.mass}")
        grids = {
            "left": np.linspace(-1.0, 0.0, POSITIVITY_SAMPLES),
            "right": np.linspace(0.0, 1.0, POSITIVITY_SAMPLES),
        }

        def samples(coeff, side):
            xs = grids[side]
            if isinstance(coeff.source, dict):
                xs = np.union1d(xs, np.asarray(coeff.source["x"], dtype=float))
            return xs, coeff(xs)

        strict = [
            ("rods.left.rho", self.rho1, "left"),
            ("rods.left.sigma", self.sigma1, "left"),
            ("rods.right.rho", self.rho2, "right"),
            ("rods.right.sigma", self.sigma2, "right"),
        ]
        for name, coeff, side in strict:
            xs, values = samples(coeff, side)
            if not np.all(np.isfinite(values)):
                raise ConfigError(f"{name}: non-finite sample on the rod")
            bad = np.where(values <= 0.0)[0]
            if bad.size:
                raise ConfigError(
                    f"{name}: non-positive coefficient sample {values[bad[0]]:.6g} "
                    f"at x={xs[bad[0]]:.6g}"
                )
        for name, coeff, side in [
            ("rods.left.q", self.q1, "left"),
            ("rods.right.q", self.q2, "right"),
        ]:
            xs, values = samples(coeff, side)
            if not np.all(np.isfinite(values)):
                raise ConfigError(f"{name}: non-finite sample on the rod")
            bad = np.where(values < 0.0)[0]
            if bad.size:
                raise ConfigError(
                    f"{name}: non-positive coefficient sample {values[bad[0]]:.6g} "
                    f"at x={xs[bad[0]]:.6g}"
                )
            # q >= 0 stays valid (interface/boundary conditions keep the operator
            # positive definite) but is flagged rather than silently accepted.
            if float(np.min(values)) < 1e-12:
                logger.warning("%s: potential has samples below 1e-12; accepted with q >= 0", name)

    @property
    def q_near_zero(self) -> bool:
        grid_l = np.linspace(-1.0, 0.0, POSITIVITY_SAMPLES)
        grid_r = np.linspace(0.0, 1.0, POSITIVITY_SAMPLES)
        return bool(
            np.min(self.q1(grid_l)) < 1e-12 or np.min(self.q2(grid_r)) < 1e-12
        )


@dataclass(frozen=True)
class TravelTimes:
    """Integrals of sqrt(rho/sigma) over each rod; they set the eigenvalue density."""

    gamma1: float
    gamma2: float

    @property
    def total(self) -> float:
        return self.gamma1 + self.gamma2


@dataclass(frozen=True)
class ProblemConfig:
    coefficients: CoefficientSet
    bc_variant: BCVariant
    horizon: float
    n_modes: int
    tolerances: Tolerances = Tolerances()

    def validate(self) -> None:
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.n_modes < 1:
            raise ConfigError(f"n_modes must be >= 1, got {self.n_modes}")
        self.coefficients.validate()


def travel_times(c: CoefficientSet, tol: Tolerances | None = None) -> TravelTimes:
    """Travel times gamma1 = int_{-1}^0 sqrt(rho1/sigma1) and gamma2 likewise."""
    tol = tol or Tolerances()
    g1 = adaptive_simpson(
        lambda x: np.sqrt(c.rho1(x) / c.sigma1(x)), -1.0, 0.0,
        rtol=tol.quad_rtol, atol=tol.quad_atol,
    )
    g2 = adaptive_simpson(
        lambda x: np.sqrt(c.rho2(x) / c.sigma2(x)), 0.0, 1.0,
        rtol=tol.quad_rtol, atol=tol.quad_atol,
    )
    return TravelTimes(gamma1=g1, gamma2=g2)


_ROD_KEYS = ("rho", "sigma", "q")
_TOP_KEYS = ("rods", "mass", "bc", "horizon", "n_modes", "tolerances")


def _coefficient_from_entry(entry, interval, where: str) -> Coefficient:
    if isinstance(entry, str):
        return Coefficient.from_expression(entry, interval)
    if isinstance(entry, (int, float)):
        return Coefficient.from_expression(repr(float(entry)), interval)
    if isinstance(entry, dict):
        unknown = set(entry) - {"x", "y"}
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")
        if "x" not in entry or "y" not in entry:
            raise ConfigError(f"{where}: sampled table needs both 'x' and 'y'")
        return Coefficient.from_table(entry["x"], entry["y"], interval, where)
    raise ConfigError(f"{where}: expected an expression string or a sampled table")


def _parse_rod(data, side: str) -> dict[str, Coefficient]:
    where = f"rods.{side}"
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping with rho/sigma/q")
    unknown = set(data) - set(_ROD_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")
    interval = (-1.0, 0.0) if side == "left" else (0.0, 1.0)
    out = {}
    for key in _ROD_KEYS:
        if key not in data:
            raise ConfigError(f"missing field {where}.{key}")
        out[key] = _coefficient_from_entry(data[key], interval, f"{where}.{key}")
    return out


def config_from_mapping(data: dict, where: str = "config") -> ProblemConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: top level must be a mapping")
    unknown = set(data) - set(_TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")
    for key in ("rods", "mass", "bc", "horizon", "n_modes"):
        if key not in data:
            raise ConfigError(f"missing field {key!r} in {where}")
    rods = data["rods"]
    if not isinstance(rods, dict):
        raise ConfigError("rods: expected a mapping with left/right sections")
    unknown = set(rods) - {"left", "right"}
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in rods")
    for side in ("left", "right"):
        if side not in rods:
            raise ConfigError(f"missing field rods.{side}")
    left = _parse_rod(rods["left"], "left")
    right = _parse_rod(rods["right"], "right")

    try:
        mass = float(data["mass"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mass: expected a real number, got {data['mass']!r}") from exc

    bc_raw = str(data["bc"]).lower()
    try:
        variant = BCVariant(bc_raw)
    except ValueError as exc:
        raise ConfigError(
            f"bc: expected 'dirichlet' or 'neumann', got {data['bc']!r}"
        ) from exc

    try:
        horizon = float(data["horizon"])
        n_modes = int(data["n_modes"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"horizon/n_modes: {exc}") from exc

    tol = Tolerances()
    if "tolerances" in data:
        if not isinstance(data["tolerances"], dict):
            raise ConfigError("tolerances: expected a mapping")
        tol = Tolerances.from_mapping(data["tolerances"])

    coeffs = CoefficientSet(
        rho1=left["rho"], sigma1=left["sigma"], q1=left["q"],
        rho2=right["rho"], sigma2=right["sigma"], q2=right["q"],
        mass=mass,
    )
    config = ProblemConfig(
        coefficients=coeffs, bc_variant=variant, horizon=horizon,
        n_modes=n_modes, tolerances=tol,
    )
    config.validate()
    return config


def load_config(path) -> ProblemConfig:
    """Load and validate a problem config from a YAML file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r") as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    return config_from_mapping(data, where=str(path))


def _coefficient_entry(coeff: Coefficient):
    return coeff.source


def config_to_mapping(config: ProblemConfig) -> dict:
    c = config.coefficients
    default = Tolerances()
    data = {
        "rods": {
            "left": {
                "rho": _coefficient_entry(c.rho1),
                "sigma": _coefficient_entry(c.sigma1),
                "q": _coefficient_entry(c.q1),
            },
            "right": {
                "rho": _coefficient_entry(c.rho2),
                "sigma": _coefficient_entry(c.sigma2),
                "q": _coefficient_entry(c.q2),
            },
        },
        "mass": c.mass,
        "bc": config.bc_variant.value,
        "horizon": config.horizon,
        "n_modes": config.n_modes,
    }
    overrides = {
        f.name: getattr(config.tolerances, f.name)
        for f in fields(Tolerances)
        if getattr(config.tolerances, f.name) != getattr(default, f.name)
    }
    if overrides:
        data["tolerances"] = overrides
    return data


def save_config(config: ProblemConfig, path) -> None:
    with open(path, "w") as handle:
        yaml.safe_dump(config_to_mapping(config), handle, sort_keys=True)


def constant_coefficients(
    rho: float = 1.0, sigma: float = 1.0, q: float = 0.0, mass: float = 1.0
) -> CoefficientSet:
    """Convenience constructor for spatially constant problem data."""
    left = (-1.0, 0.0)
    right = (0.0, 1.0)
    return CoefficientSet(
        rho1=Coefficient.from_expression(repr(float(rho)), left),
        sigma1=Coefficient.from_expression(repr(float(sigma)), left),
        q1=Coefficient.from_expression(repr(float(q)), left),
        rho2=Coefficient.from_expression(repr(float(rho)), right),
        sigma2=Coefficient.from_expression(repr(float(sigma)), right),
        q2=Coefficient.from_expression(repr(float(q)), right),
        mass=float(mass),
    )


def coefficients_from_expressions(
    rho1: str, sigma1: str, q1: str, rho2: str, sigma2: str, q2: str, mass: float
) -> CoefficientSet:
    left = (-1.0, 0.0)
    right = (0.0, 1.0)
    cs = CoefficientSet(
        rho1=Coefficient.from_expression(rho1, left),
        sigma1=Coefficient.from_expression(sigma1, left),
        q1=Coefficient.from_expression(q1, left),
        rho2=Coefficient.from_expression(rho2, right),
        sigma2=Coefficient.from_expression(sigma2, right),
        q2=Coefficient.from_expression(q2, right),
        mass=float(mass),
    )
    cs.validate()
    return cs
