"""Command-line front end: spectrum, control synthesis, simulation, verification.

Exit codes: 0 success, 2 validation error, 3 numerical conditioning,
4 theorem-certification failure, 1 unexpected error.  Every run writes a
manifest before doing work and finalizes it afterwards; failures leave a
machine-readable ``error.json`` in the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .coefficients import BCVariant, ConfigError, ProblemConfig, load_config
from .moments import (
    ConditioningError,
    GridMismatchError,
    MomentResidualError,
    build_biorthogonal,
    make_moment_problem,
    project_initial_data,
    sampled_control,
    synthesize_control,
    write_control_csv,
    write_moments_json,
)
from .expressions import ExpressionError, compile_expression
from .quadrature import QuadratureError
from .shooting import IntegrationError
from .simulator import (
    SimulationInputError,
    simulate_fd,
    simulate_galerkin,
    state_from_mode,
    state_from_samples,
    verify_null_control,
    write_terminal_csv,
    write_trajectory_csv,
    write_verification_json,
)
from .spectrum import (
    BracketError,
    EigenfunctionError,
    PoleProximityError,
    RootRefineError,
    assemble_eigenfunctions,
    eigenvalues_with_flags,
    spectral_report,
    write_eigenfunction_csv,
    write_spectrum_csv,
    _near_coincidence_flags,
)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_CONDITIONING = 3
EXIT_CERTIFICATION = 4

_VALIDATION_ERRORS = (
    ConfigError,
    ExpressionError,
    GridMismatchError,
    SimulationInputError,
    ValueError,
)
_NUMERICAL_ERRORS = (
    BracketError,
    RootRefineError,
    EigenfunctionError,
    IntegrationError,
    MomentResidualError,
    PoleProximityError,
    QuadratureError,
)


class CertificationError(RuntimeError):
    """A theorem-certification check came out negative."""


class _Manifest:
    def __init__(self, out_dir: Path, command: str, args: argparse.Namespace):
        self.path = out_dir / "run_manifest.json"
        self.data = {
            "tool": "heatrods",
            "version": __version__,
            "command": command,
            "config": str(getattr(args, "config", "")),
            "output_dir": str(out_dir),
            "seed": getattr(args, "seed", 0),
            "status": "running",
            "started_unix": time.time(),
        }
        self._t0 = time.perf_counter()
        self.write()

    def write(self):
        with open(self.path, "w") as handle:
            json.dump(self.data, handle, indent=2, sort_keys=True)
            handle.write("\n")

    def finalize(self, status: str, exit_code: int):
        self.data["status"] = status
        self.data["exit_code"] = exit_code
        self.data["wall_seconds"] = time.perf_counter() - self._t0
        self.write()


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ProblemConfig:
    config = load_config(args.config)
    if args.variant:
        config = ProblemConfig(
            coefficients=config.coefficients,
            bc_variant=BCVariant(args.variant),
            horizon=config.horizon,
            n_modes=config.n_modes,
            tolerances=config.tolerances,
        )
    return config


def _write_error(out_dir: Path, code: int, kind: str, message: str) -> None:
    payload = {"exit_code": code, "kind": kind, "message": message}
    try:
        with open(out_dir / "error.json", "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError:
        pass


def _initial_state(spec: str, c, eigenpairs):
    """Initial data from a CLI spec: mode:<k>, zero, expr:<u>|<v>|<z>, file:<path>."""
    grid_u = eigenpairs[0].grid_u
    grid_v = eigenpairs[0].grid_v
    if spec == "zero":
        return state_from_samples(c, grid_u, np.zeros_like(grid_u), grid_v,
                                  np.zeros_like(grid_v), 0.0)
    if spec.startswith("mode:"):
        k = int(spec.split(":", 1)[1])
        if not 1 <= k <= len(eigenpairs):
            raise SimulationInputError(
                f"mode index {k} outside the computed range 1..{len(eigenpairs)}"
            )
        return state_from_mode(c, eigenpairs[k - 1])
    if spec.startswith("expr:"):
        body = spec.split(":", 1)[1]
        parts = body.split("|")
        if len(parts) != 3:
            raise SimulationInputError(
                "expr initial data needs three |-separated parts: <u>|<v>|<z>"
            )
        f_u = compile_expression(parts[0])
        f_v = compile_expression(parts[1])
        z = float(parts[2])
        u = np.asarray(f_u(grid_u), dtype=float) * np.ones_like(grid_u)
        v = np.asarray(f_v(grid_v), dtype=float) * np.ones_like(grid_v)
        return state_from_samples(c, grid_u, u, grid_v, v, z)
    if spec.startswith("file:"):
        path = Path(spec.split(":", 1)[1])
        if not path.exists():
            raise SimulationInputError(f"initial-data file not found: {path}")
        import csv as _csv

        xs = {"left": [], "right": []}
        vals = {"left": [], "right": []}
        z = 0.0
        with open(path) as handle:
            for row in _csv.DictReader(handle):
                piece = row["piece"].strip()
                if piece == "mass":
                    z = float(row["value"])
                else:
                    xs[piece].append(float(row["x"]))
                    vals[piece].append(float(row["value"]))
        from scipy.interpolate import CubicSpline

        u = CubicSpline(xs["left"], vals["left"])(grid_u)
        v = CubicSpline(xs["right"], vals["right"])(grid_v)
        return state_from_samples(c, grid_u, u, grid_v, v, z)
    raise SimulationInputError(f"unrecognized initial-data spec {spec!r}")


def _spectrum_pipeline(config, n_max, tol):
    return spectral_report(config.coefficients, config.bc_variant, n_max, tol)


def cmd_spectrum(args) -> int:
    out = _prepare_out(args)
    manifest = _Manifest(out, "spectrum", args)
    config = _load(args)
    n_max = args.n_max or config.n_modes
    report = _spectrum_pipeline(config, n_max, config.tolerances)
    write_spectrum_csv(report, out / "spectrum.csv")
    if args.dump_eigenfunctions:
        for pair in report.eigenvalues:
            write_eigenfunction_csv(pair, out / f"eigenfunction_{pair.index}.csv")
    summary = {
        "variant": report.variant.value,
        "n_max": n_max,
        "gamma1": report.travel.gamma1,
        "gamma2": report.travel.gamma2,
        "min_gap": report.min_gap,
        "interpolation_all_ok": report.all_interpolation_ok,
        "coincidence_indices": report.auxiliary.coincidence_indices.tolist(),
        "asymptote_ratio_last": float(report.asymptote_ratios[-1]),
    }
    with open(out / "spectrum_report.json", "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    if not (report.all_interpolation_ok and report.min_gap > 0):
        manifest.finalize("certification-failed", EXIT_CERTIFICATION)
        raise CertificationError(
            f"interpolation_all_ok={report.all_interpolation_ok}, "
            f"min_gap={report.min_gap}"
        )
    manifest.finalize("ok", EXIT_OK)
    return EXIT_OK


def cmd_gap_report(args) -> int:
    out = _prepare_out(args)
    manifest = _Manifest(out, "gap-report", args)
    config = _load(args)
    n_max = args.n_max or config.n_modes
    report = _spectrum_pipeline(config, n_max, config.tolerances)
    import csv as _csv

    with open(out / "gaps.csv", "w", newline="") as handle:
        writer = _csv.writer(handle)
        writer.writerow(["n", "lambda", "gap"])
        for i in range(report.lambdas.size):
            gap = repr(float(report.gaps[i])) if i < report.gaps.size else ""
            writer.writerow([i + 1, repr(float(report.lambdas[i])), gap])
    summary = {
        "variant": report.variant.value,
        "min_gap": report.min_gap,
        "measured_delta": report.min_gap,
        "n_max": n_max,
    }
    with open(out / "gap_report.json", "w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    if not report.min_gap > 0:
        manifest.finalize("certification-failed", EXIT_CERTIFICATION)
        raise CertificationError(f"min_gap={report.min_gap}")
    manifest.finalize("ok", EXIT_OK)
    return EXIT_OK


def _control_pipeline(config, args, n_modes):
    tol = config.tolerances
    c = config.coefficients
    variant = config.bc_variant
    lams, flags, aux = eigenvalues_with_flags(c, variant, n_modes + 1, tol)
    pairs = assemble_eigenfunctions(
        c, lams[:n_modes], variant, tol,
        flags=_near_coincidence_flags(aux, flags)[:n_modes],
    )
    y0 = _initial_state(args.init, c, pairs)
    coeffs = project_initial_data(y0, pairs, c)
    problem = make_moment_problem(coeffs, pairs, c, config.horizon, variant)
    family = build_biorthogonal(
        problem.exponents, config.horizon, precision=args.precision,
        condition_ceiling=tol.gram_condition_ceiling,
    )
    signal = synthesize_control(problem, family, residual_tol=tol.moment_residual)
    return pairs, y0, problem, family, signal


def cmd_control(args) -> int:
    out = _prepare_out(args)
    manifest = _Manifest(out, "control", args)
    config = _load(args)
    n_modes = args.n_modes or config.n_modes
    _, _, problem, family, signal = _control_pipeline(config, args, n_modes)
    write_control_csv(signal, out / "control.csv")
    write_moments_json(problem, family, signal, out / "moments.json")
    manifest.finalize("ok", EXIT_OK)
    return EXIT_OK


def cmd_simulate(args) -> int:
    out = _prepare_out(args)
    manifest = _Manifest(out, "simulate", args)
    config = _load(args)
    c = config.coefficients
    variant = config.bc_variant
    tol = config.tolerances
    n_modes = args.n_modes or config.n_modes

    if args.control == "synth":
        pairs, y0, problem, family, signal = _control_pipeline(config, args, n_modes)
    else:
        lams, flags, aux = eigenvalues_with_flags(c, variant, n_modes + 1, tol)
        pairs = assemble_eigenfunctions(
            c, lams[:n_modes], variant, tol,
            flags=_near_coincidence_flags(aux, flags)[:n_modes],
        )
        y0 = _initial_state(args.init, c, pairs)
        if args.control == "zero":
            signal = None
        elif args.control.startswith("file:"):
            import csv as _csv

            path = Path(args.control.split(":", 1)[1])
            ts, hs = [], []
            with open(path) as handle:
                for row in _csv.DictReader(handle):
                    ts.append(float(row["t"]))
                    hs.append(float(row["h"]))
            signal = sampled_control(np.array(ts), np.array(hs), config.horizon)
        else:
            raise SimulationInputError(
                f"unrecognized control spec {args.control!r} (zero, synth or file:<path>)"
            )

    gal = simulate_galerkin(c, variant, y0, signal, config.horizon, pairs)
    fd = simulate_fd(
        c, variant, y0, signal, config.horizon, nx=args.nx, nt=args.nt,
        eigenpairs=pairs,
    )
    write_trajectory_csv(gal, out / "trajectory.csv")
    write_trajectory_csv(fd, out / "trajectory_fd.csv")
    write_terminal_csv(gal, out / "terminal.csv")
    write_terminal_csv(fd, out / "terminal_fd.csv")
    manifest.finalize("ok", EXIT_OK)
    return EXIT_OK


def cmd_verify(args) -> int:
    out = _prepare_out(args)
    manifest = _Manifest(out, "verify", args)
    config = _load(args)
    c = config.coefficients
    variant = config.bc_variant
    tol = config.tolerances
    n_modes = args.n_modes or config.n_modes

    lams, flags, aux = eigenvalues_with_flags(c, variant, n_modes + 25, tol)
    pairs = assemble_eigenfunctions(
        c, lams, variant, tol, flags=_near_coincidence_flags(aux, flags)
    )
    y0 = _initial_state(args.init, c, pairs[:n_modes])
    report, signal = verify_null_control(
        c, variant, y0, config.horizon, n_modes, nx=args.nx, nt=args.nt,
        tol=tol, precision=args.precision, eigenpairs=pairs,
    )
    write_verification_json(report, out / "verification.json")
    write_control_csv(signal, out / "control.csv")
    if not report.passed:
        manifest.finalize("certification-failed", EXIT_CERTIFICATION)
        raise CertificationError(
            f"verification failed: modal_ok={report.modal_ok} "
            f"fd_ok={report.fd_ok} baseline_ok={report.baseline_ok}"
        )
    manifest.finalize("ok", EXIT_OK)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatrods",
        description="Spectral analysis and boundary null control of two "
        "heat-conducting rods coupled by a point mass.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="problem config (YAML)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="recorded in the manifest for reproducibility")
        p.add_argument("--precision", choices=["double", "extended"],
                       default="double", help="linear-algebra precision mode")
        p.add_argument("--variant", choices=["dirichlet", "neumann"],
                       default=None, help="override the config boundary variant")

    p = sub.add_parser("spectrum", help="compute and certify the spectrum")
    common(p)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--dump-eigenfunctions", action="store_true")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("gap-report", help="spectral gap certification summary")
    common(p)
    p.add_argument("--n-max", type=int, default=None)
    p.set_defaults(func=cmd_gap_report)

    p = sub.add_parser("control", help="synthesize a null control")
    common(p)
    p.add_argument("--init", required=True,
                   help="initial data: mode:<k>, zero, expr:<u>|<v>|<z>, file:<path>")
    p.add_argument("--n-modes", type=int, default=None)
    p.set_defaults(func=cmd_control)

    p = sub.add_parser("simulate", help="forward-simulate with a control input")
    common(p)
    p.add_argument("--init", required=True)
    p.add_argument("--control", default="zero",
                   help="zero, synth or file:<csv with t,h columns>")
    p.add_argument("--n-modes", type=int, default=None)
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--nt", type=int, default=2048)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="end-to-end null-control verification")
    common(p)
    p.add_argument("--init", required=True)
    p.add_argument("--n-modes", type=int, default=None)
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--nt", type=int, default=4096)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out)
    try:
        return args.func(args)
    except CertificationError as exc:
        _write_error(out_dir, EXIT_CERTIFICATION, "certification", str(exc))
        print(f"heatrods: certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except ConditioningError as exc:
        _write_error(out_dir, EXIT_CONDITIONING, "conditioning", str(exc))
        print(f"heatrods: conditioning failure: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except _VALIDATION_ERRORS as exc:
        _write_error(out_dir, EXIT_VALIDATION, "validation", str(exc))
        print(f"heatrods: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _NUMERICAL_ERRORS as exc:
        _write_error(out_dir, EXIT_CONDITIONING, "numerical", str(exc))
        print(f"heatrods: numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except Exception as exc:  # pragma: no cover - defensive
        _write_error(out_dir, EXIT_UNEXPECTED, "unexpected", f"{type(exc).__name__}: {exc}")
        print(f"heatrods: unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
