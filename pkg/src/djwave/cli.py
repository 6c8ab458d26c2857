"""Command line driver.

Exit codes: 0 success, 2 configuration, 3 seed divergence, 4 continuation
divergence, 5 file input/output.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .config import RunConfig, config_from_dict, load_config, save_config
from .continuation import DIVERGENCE, STEP_FLOOR, run_branch
from .diagnostics import diagnose
from .errors import (ConfigError, ConvergenceError, DomainError, ParameterError,
                     StagnationError, WaveError)
from .eulerian import roundtrip, to_eulerian
from .height import make_grid, newton_solve
from .io import (ExportError, emit_plot_data, export_eulerian, export_profile,
                 export_spectrum, read_field, select_points, write_field, write_table)
from .kdv import froude_from_epsilon, initial_guess, kdv_scaling
from .spectrum import eigenvalues

EXIT_OK, EXIT_CONFIG, EXIT_SEED, EXIT_BRANCH, EXIT_IO = 0, 2, 3, 4, 5
OUTPUT_ROOT_ENV = "DJWAVE_OUTPUT_ROOT"

log = logging.getLogger("djwave")


def output_dir(config: RunConfig) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    out = Path(config.output_dir)
    return Path(root) / out if root and not out.is_absolute() else out


def _mkdir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"{path}: {exc}") from exc
    return path


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise ExportError(f"{path}: {exc}") from exc


def _profile_stage(config: RunConfig, out: Path):
    profile = config.profile()
    export_profile(out / "profile.dat", profile)
    report = eigenvalues(profile, profile.mu_cr, k=config.n_eigen)
    export_spectrum(out / "spectrum.dat", report)
    log.info("mu_cr = %.12g, F_cr = %.12g, nu = %s", profile.mu_cr, profile.froude_cr,
             report.eigenvalues)
    return profile, report


def _seed_length(config: RunConfig, profile) -> float:
    opts = config.continuation_options()
    return opts.length or kdv_scaling(profile).min_length(config.eps) * opts.length_factor


def _export_point(out: Path, tag: str, fld, froude: float, P_atm: float) -> None:
    _mkdir(out / "fields")
    _mkdir(out / "eulerian")
    write_field(out / "fields" / f"{tag}.bin", fld, froude)
    fields_ = to_eulerian(fld, froude, P_atm)
    export_eulerian(out / "eulerian" / f"{tag}.dat", fields_, fld.profile)


def run(config: RunConfig) -> int:
    """Profile, spectrum and (unless dry) the full branch with its exports."""
    try:
        out = _mkdir(output_dir(config))
        save_config(config, out / "config.toml")
        profile, _ = _profile_stage(config, out)
        if config.dry_run:
            return EXIT_OK
        opts = config.continuation_options()
        branch = run_branch(profile, config.eps, opts)
        status = f"reason = {branch.reason}\npoints = {len(branch)}\nmessage = {branch.message}\n"
        _write_text(out / "status.txt", status)
        log.info("branch ended (%s) after %d points %s", branch.reason, len(branch),
                 branch.message)
        if len(branch) == 0:
            return EXIT_SEED
        write_table(out / "branch.dat", branch.table(),
                    {"reason": branch.reason, "digest": profile.digest})
        _mkdir(out / "diagnostics")
        for i, p in enumerate(branch.points):
            report = p.diagnostics
            _write_text(out / "diagnostics" / f"point_{i:03d}.txt",
                        f"t = {p.t:.17g}\nN = {p.N:.17g}\n{report.text()}\n")
        for i in select_points(len(branch), config.export_points):
            p = branch.points[i]
            _export_point(out, f"point_{i:03d}", p.field, p.froude, config.P_atm)
        emit_plot_data(branch, out / "plot", config.export_points)
        if branch.reason in (DIVERGENCE, STEP_FLOOR):
            return EXIT_BRANCH
        return EXIT_OK
    except ExportError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except WaveError as exc:
        log.error("%s", exc)
        return EXIT_BRANCH


def solve(config: RunConfig) -> int:
    """One wave from the small-amplitude guess at the configured eps."""
    try:
        out = _mkdir(output_dir(config))
        profile = config.profile()
        F = froude_from_epsilon(profile, config.eps)
        grid = make_grid(profile, _seed_length(config, profile), config.n_r, config.grading)
        try:
            guess = initial_guess(profile, config.eps, grid)
            result = newton_solve(guess, F, config.solver_options())
        except (ConvergenceError, StagnationError, ParameterError, DomainError) as exc:
            log.error("seed failed: %s", exc)
            return EXIT_SEED
        report = diagnose(result.field, F, config.P_atm)
        _write_text(out / "diagnostics.txt",
                    f"iterations = {result.iterations}\n{report.text()}\n")
        _export_point(out, "solution", result.field, F, config.P_atm)
        print(report.text())
        return EXIT_OK
    except ExportError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


def reconstruct(config: RunConfig, path: str) -> int:
    """Eulerian export of a stored field and the error of its inverse map."""
    try:
        out = _mkdir(output_dir(config))
        fld, F = read_field(path, config.profile())
        fields_ = to_eulerian(fld, F, config.P_atm)
        export_eulerian(out / (Path(path).stem + "_eulerian.dat"), fields_, fld.profile)
        print(f"roundtrip_error = {roundtrip(fields_).error:.17g}")
        return EXIT_OK
    except ExportError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ConfigError, ValueError, WaveError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


# ---------------------------------------------------------------- argument parsing

def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML run configuration")
    for f in fields(RunConfig):
        if f.name == "breakpoints":
            parser.add_argument("--breakpoints", type=float, nargs="+", metavar="Y U",
                                help="flattened (y, U*) pairs from bed to surface")
        elif f.type == "bool":
            parser.add_argument(_flag(f.name), action="store_true", default=None)
        else:
            kind = {"int": int, "float": float, "str": str}[f.type]
            parser.add_argument(_flag(f.name), type=kind, default=None)


def _config_from_args(args) -> RunConfig:
    base = load_config(args.config) if args.config else RunConfig()
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    if "breakpoints" in overrides:
        flat = overrides["breakpoints"]
        if len(flat) % 2:
            raise ConfigError("breakpoints: need an even number of values")
        overrides["breakpoints"] = [[flat[k], flat[k + 1]] for k in range(0, len(flat), 2)]
    if not overrides:
        return base
    merged = {f.name: getattr(base, f.name) for f in fields(RunConfig)}
    merged.update(overrides)
    return config_from_dict(merged)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="djwave",
                                     description="Solitary waves on sheared currents.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("profile", "laminar profile and critical Froude number"),
                       ("spectrum", "Sturm-Liouville eigenvalues at mu_cr"),
                       ("solve", "one small-amplitude wave"),
                       ("continue", "full branch with all exports"),
                       ("reconstruct", "Eulerian fields of a stored solution")):
        p = sub.add_parser(name, help=text)
        _add_config_flags(p)
        if name == "reconstruct":
            p.add_argument("field", help="binary field file written by solve or continue")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "continue":
        return run(config)
    if args.command == "solve":
        return solve(config)
    if args.command == "reconstruct":
        return reconstruct(config, args.field)
    try:
        out = _mkdir(output_dir(config))
        if args.command == "profile":
            profile = config.profile()
            export_profile(out / "profile.dat", profile)
            print(f"mu_cr = {profile.mu_cr:.17g}\nF_cr = {profile.froude_cr:.17g}\n"
                  f"lambda = {profile.lam:.17g}\njumps = {list(profile.jumps)}")
        else:
            profile = config.profile()
            report = eigenvalues(profile, profile.mu_cr, k=config.n_eigen)
            export_spectrum(out / "spectrum.dat", report)
            for j, nu, lo, hi in report.table():
                print(f"nu_{j} = {nu:.17g}  in ({lo:.6g}, {hi:.6g})")
    except ExportError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, WaveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
