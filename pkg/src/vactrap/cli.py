"""Command-line front end.

Subcommands
    center     damping/shift at the cavity center vs detuning
    axial      damping/shift along the cavity axis
    plane      damping/shift on a (z, x) grid through the center
    force      vacuum-force profile (needs a drive)
    potential  trapping-potential profile (needs a drive)
    validate   run the internal oracle suite, emit a JSON report

Exit codes: 0 success, 2 configuration error, 3 numerical trouble
(non-converged or out-of-regime rows; the table is still written),
4 validation failure.

All output is dimensionless (rates over Gamma_vac, lengths in 1/k,
energies in hbar*Gamma_vac, forces in hbar*k*Gamma_vac).  Identical
configuration yields byte-identical output regardless of --threads;
wall-clock timings therefore only appear in JSON metadata when
--timings is passed explicitly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from .cavity import (
    POSITION_MAX_RADIUS,
    DipoleOrientation,
    center_gamma,
    center_shift,
    phase_fwhm,
)
from .config import ConfigError, RunConfig, load_config
from .fields import ScanSpec, run_scan, trap_minimum
from .quadrature import ConvergenceError
from .validation import run_validation_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

_SCAN_DEFAULTS = {
    "center": (-3.0, 3.0, 241),
    "axial": (-100.0, 100.0, 401),
    "plane": (-20.0, 20.0, 41),
    "force": (-50.0, 50.0, 201),
    "potential": (-50.0, 50.0, 201),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vactrap",
        description="Cavity-modified spontaneous emission and "
                    "vacuum-induced trapping near a spherical-mirror "
                    "cavity center.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="configuration file (defaults used if omitted)")
    common.add_argument("--out", metavar="PATH",
                        help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default csv)")
    common.add_argument("--tolerance", type=float, default=1e-9,
                        help="quadrature doubling tolerance (default 1e-9)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for scan points (default 1)")
    common.add_argument("--quadrature", action="store_true",
                        help="force full sphere quadrature where closed "
                             "forms would be used")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for Monte-Carlo checks (default 0)")
    common.add_argument("--timings", action="store_true",
                        help="include wall-clock timings in JSON metadata "
                             "(breaks byte-for-byte reproducibility)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("center", "detuning scan of the center damping and shift"),
        ("axial", "on-axis spatial scan"),
        ("plane", "(z, x) plane scan"),
        ("force", "vacuum-force profile"),
        ("potential", "trapping-potential profile"),
        ("validate", "run the internal consistency suite"),
    ]:
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def _scan_range(run: RunConfig, command: str) -> tuple[float, float, int]:
    start, stop, n_points = _SCAN_DEFAULTS[command]
    if run.scan_start is not None:
        start = run.scan_start
    if run.scan_stop is not None:
        stop = run.scan_stop
    if run.scan_points is not None:
        n_points = run.scan_points
    if not start < stop:
        raise ConfigError("scan start must be below stop")
    return start, stop, n_points


def _check_spatial_range(start: float, stop: float, plane: bool) -> None:
    reach = max(abs(start), abs(stop))
    if plane:
        reach *= math.sqrt(2.0)
    if reach > POSITION_MAX_RADIUS:
        raise ConfigError(
            f"scan reaches |kr| = {reach:.1f}, beyond the supported "
            f"{POSITION_MAX_RADIUS:g}/k region")


def _phases_for(coords: np.ndarray, rho: float) -> np.ndarray:
    """Detuning coordinates (linewidths) to phase offsets; free space has
    no linewidth, so every detuning maps to phase 0 there."""
    if rho == 0.0:
        return np.zeros_like(coords)
    phases = coords * phase_fwhm(rho)
    if np.max(np.abs(phases)) > math.pi / 2:
        raise ConfigError(
            "detuning scan leaves the single-resonance window "
            "(|phi0| > pi/2); narrow the scan range")
    return phases


def _format_value(value: float, precision: int) -> str:
    return format(float(value), f".{precision}g")


def _round_trip(value: float, precision: int) -> float:
    return float(_format_value(value, precision))


def _render_csv(columns, rows, precision: int) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_value(v, precision) for v in row))
    return "\n".join(lines) + "\n"


def _render_json(columns, rows, metadata: dict, precision: int) -> str:
    payload = {
        "metadata": metadata,
        "columns": list(columns),
        "rows": [[_round_trip(v, precision) for v in row] for row in rows],
    }
    return json.dumps(payload, indent=2) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    tmp_path = out_path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    os.replace(tmp_path, out_path)


def _base_metadata(command: str, args, run: RunConfig) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": run.to_metadata(),
        "tolerance": args.tolerance,
    }


def _emit_table(args, run: RunConfig, command: str, columns, rows,
                non_converged=(), weak_excitation=(), extra_metadata=None,
                started=None) -> int:
    out_format = args.format or run.out_format
    out_path = args.out if args.out is not None else run.out_path
    if out_format == "json":
        metadata = _base_metadata(command, args, run)
        metadata["non_converged_rows"] = list(non_converged)
        metadata["weak_excitation_rows"] = list(weak_excitation)
        if extra_metadata:
            metadata.update(extra_metadata)
        if args.timings and started is not None:
            metadata["timings"] = {
                "compute_seconds": time.perf_counter() - started}
        text = _render_json(columns, rows, metadata, run.precision)
    else:
        text = _render_csv(columns, rows, run.precision)
    _emit(text, out_path)
    status = EXIT_OK
    if non_converged:
        print(f"vactrap {command}: {len(non_converged)} row(s) failed the "
              f"convergence check: {list(non_converged)[:10]}",
              file=sys.stderr)
        status = EXIT_NUMERICAL
    if weak_excitation:
        print(f"vactrap {command}: {len(weak_excitation)} row(s) exceed the "
              f"weak-excitation limit: {list(weak_excitation)[:10]}",
              file=sys.stderr)
        status = EXIT_NUMERICAL
    return status


def cmd_center(args, run: RunConfig) -> int:
    started = time.perf_counter()
    start, stop, n_points = _scan_range(run, "center")
    coords = np.linspace(start, stop, n_points)
    cavity = run.cavity
    parallel = DipoleOrientation.parallel()
    perpendicular = DipoleOrientation.perpendicular()
    columns = ("detuning_linewidths", "gamma_parallel", "gamma_perpendicular",
               "shift_parallel", "shift_perpendicular")
    non_converged: list[int] = []
    if args.quadrature:
        spec_par = ScanSpec("detuning", start, stop, n_points, cavity,
                            parallel)
        spec_perp = ScanSpec("detuning", start, stop, n_points, cavity,
                             perpendicular)
        res_par = run_scan(spec_par, tolerance=args.tolerance,
                           n_workers=args.threads)
        res_perp = run_scan(spec_perp, tolerance=args.tolerance,
                            n_workers=args.threads)
        rows = [
            (c, rp[1], rq[1], rp[2], rq[2])
            for c, rp, rq in zip(coords, res_par.rows, res_perp.rows)
        ]
        non_converged = sorted(set(res_par.non_converged)
                               | set(res_perp.non_converged))
    else:
        phases = _phases_for(coords, cavity.rho)
        rows = list(zip(
            coords,
            np.atleast_1d(center_gamma(parallel, cavity, phases)),
            np.atleast_1d(center_gamma(perpendicular, cavity, phases)),
            np.atleast_1d(center_shift(parallel, cavity, phases)),
            np.atleast_1d(center_shift(perpendicular, cavity, phases)),
        ))
    return _emit_table(args, run, "center", columns, rows,
                       non_converged=non_converged, started=started)


def _spatial_scan(args, run: RunConfig, command: str, axis: str) -> int:
    started = time.perf_counter()
    start, stop, n_points = _scan_range(run, command)
    _check_spatial_range(start, stop, plane=(axis == "plane"))
    spec = ScanSpec(axis, start, stop, n_points, run.cavity, run.orientation,
                    detuning=run.detuning)
    drive = run.drive
    pi_e = drive[1] if drive is not None and drive[0] == "pi_e" else None
    weak = (drive[1], drive[2]) if drive is not None and drive[0] == "weak" \
        else None
    result = run_scan(spec, tolerance=args.tolerance, n_workers=args.threads,
                      pi_e=pi_e, weak_drive=weak)

    if command == "force":
        keep = tuple(c for c in result.columns
                     if c in ("kz", "kx") or c.startswith("force")
                     or c == "potential")
    elif command == "potential":
        keep = tuple(c for c in result.columns
                     if c in ("kz", "kx", "potential"))
    else:
        keep = result.columns
    indices = [result.columns.index(c) for c in keep]
    rows = [tuple(row[i] for i in indices) for row in result.rows]

    extra = None
    if command in ("force", "potential"):
        trap = trap_minimum(result)
        if trap is not None:
            extra = {"trap": {
                "potential_min": trap["potential_min"],
                "coordinates": trap["coordinates"],
            }}
    return _emit_table(args, run, command, keep, rows,
                       non_converged=result.non_converged,
                       weak_excitation=result.weak_excitation,
                       extra_metadata=extra, started=started)


def cmd_axial(args, run: RunConfig) -> int:
    return _spatial_scan(args, run, "axial", "axial")


def cmd_plane(args, run: RunConfig) -> int:
    return _spatial_scan(args, run, "plane", "plane")


def _force_axis(run: RunConfig) -> str:
    if run.scan_type in ("axial", "transverse"):
        return run.scan_type
    return "axial"


def cmd_force(args, run: RunConfig) -> int:
    if run.drive is None:
        raise ConfigError("force profiles need a [drive] section "
                          "(pi_e, or rabi with laser_detuning)")
    return _spatial_scan(args, run, "force", _force_axis(run))


def cmd_potential(args, run: RunConfig) -> int:
    if run.drive is None:
        raise ConfigError("potential profiles need a [drive] section "
                          "(pi_e, or rabi with laser_detuning)")
    return _spatial_scan(args, run, "potential", _force_axis(run))


def cmd_validate(args, run: RunConfig) -> int:
    started = time.perf_counter()
    checks = run_validation_suite(run.cavity, run.detuning, seed=args.seed)
    passed = all(check.passed for check in checks)
    report = {
        "metadata": _base_metadata("validate", args, run),
        "passed": passed,
        "checks": [asdict(check) for check in checks],
    }
    report["metadata"]["seed"] = args.seed
    if args.timings:
        report["metadata"]["timings"] = {
            "compute_seconds": time.perf_counter() - started}
    out_path = args.out if args.out is not None else run.out_path
    _emit(json.dumps(report, indent=2) + "\n", out_path)
    if not passed:
        failed = [check.name for check in checks if not check.passed]
        print(f"vactrap validate: FAILED checks: {', '.join(failed)}",
              file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


_COMMANDS = {
    "center": cmd_center,
    "axial": cmd_axial,
    "plane": cmd_plane,
    "force": cmd_force,
    "potential": cmd_potential,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = load_config(args.config) if args.config else RunConfig.defaults()
    except ConfigError as err:
        print(f"vactrap: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, run)
    except ConfigError as err:
        print(f"vactrap: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"vactrap: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as err:
        print(f"vactrap: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
