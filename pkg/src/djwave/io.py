"""Persistence: binary field files, delimited text tables and plot data.

Binary field layout (little endian): a header ``<8sII16sddd`` holding the
magic, n_r, n_s, the profile digest, L, the r-grading and F, then the r-nodes
and phi in row-major order as float64.  Text files use 17 significant digits
so they re-load to within rounding.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .background import LaminarProfile, laminar_height, mu_of_kappa
from .diagnostics import laminar_flow_force
from .errors import WaveError
from .height import Grid, HeightField

FIELD_MAGIC = b"DJWFLD01"
FIELD_HEADER = struct.Struct("<8sII16sddd")
FMT = "%.17g"


class ExportError(WaveError, OSError):
    """A file could not be written or read back."""


def _guard(action, path):
    try:
        return action()
    except OSError as exc:
        raise ExportError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------- binary fields

def field_bytes(fld: HeightField, froude: float) -> bytes:
    g = fld.grid
    head = FIELD_HEADER.pack(FIELD_MAGIC, g.n_r, g.n_s, fld.profile.digest.encode(),
                             g.L, g.grading, float(froude))
    return (head + np.ascontiguousarray(g.r, dtype="<f8").tobytes()
            + np.ascontiguousarray(fld.phi, dtype="<f8").tobytes())


def field_from_bytes(data: bytes, profile: LaminarProfile) -> tuple[HeightField, float]:
    if len(data) < FIELD_HEADER.size:
        raise ExportError("truncated field file")
    magic, n_r, n_s, digest, L, grading, froude = FIELD_HEADER.unpack_from(data)
    if magic != FIELD_MAGIC:
        raise ExportError("not a field file")
    if digest.decode() != profile.digest or n_s != profile.n_s:
        raise ExportError("field was computed on a different laminar profile")
    body = np.frombuffer(data, dtype="<f8", offset=FIELD_HEADER.size)
    if body.size != (n_r + 1) * (1 + n_s + 1):
        raise ExportError("field file size does not match its header")
    r = body[:n_r + 1].astype(float)
    phi = body[n_r + 1:].reshape(n_r + 1, n_s + 1).astype(float)
    grid = Grid(r=r, s=profile.s, L=L, grading=grading)
    return HeightField(phi=phi, grid=grid, profile=profile), froude


def write_field(path, fld: HeightField, froude: float) -> None:
    _guard(lambda: Path(path).write_bytes(field_bytes(fld, froude)), path)


def read_field(path, profile: LaminarProfile) -> tuple[HeightField, float]:
    return field_from_bytes(_guard(lambda: Path(path).read_bytes(), path), profile)


# ---------------------------------------------------------------- text tables

def _cell(value) -> str:
    if isinstance(value, str):
        return value
    return FMT % value


def write_table(path, rows: list[dict], comments: dict | None = None) -> None:
    """Whitespace-delimited table with one header line naming the columns."""
    lines = [f"# {k} = {v}" for k, v in (comments or {}).items()]
    if rows:
        keys = list(rows[0])
        lines.append("# " + " ".join(keys))
        lines += [" ".join(_cell(row[k]) for k in keys) for row in rows]
    _guard(lambda: Path(path).write_text("\n".join(lines) + "\n"), path)


def _parse(token: str):
    try:
        return float(token)
    except ValueError:
        return token


def read_table(path) -> list[dict]:
    lines = _guard(lambda: Path(path).read_text(), path).splitlines()
    header = [ln for ln in lines if ln.startswith("# ") and " = " not in ln]
    if not header:
        return []
    keys = header[-1][2:].split()
    return [dict(zip(keys, map(_parse, ln.split())))
            for ln in lines if ln and not ln.startswith("#")]


def write_columns(path, columns: dict, comments: dict | None = None) -> None:
    keys = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float).ravel() for k in keys])
    head = [f"{k} = {v}" for k, v in (comments or {}).items()] + [" ".join(keys)]

    def save():
        np.savetxt(path, data, fmt=FMT, header="\n".join(head))
    _guard(save, path)


def read_columns(path) -> dict:
    lines = _guard(lambda: Path(path).read_text(), path).splitlines()
    keys = [ln for ln in lines if ln.startswith("# ") and " = " not in ln][-1][2:].split()
    data = np.loadtxt(path, ndmin=2)
    return {k: data[:, i] for i, k in enumerate(keys)}


# ---------------------------------------------------------------- exports

def export_profile(path, profile: LaminarProfile) -> None:
    t = profile.table()
    write_columns(path, {"s": t[:, 0], "H": t[:, 1], "H_s": t[:, 2], "Gamma": t[:, 3],
                         "gamma": t[:, 4]},
                  {"lambda": FMT % profile.lam, "mu_cr": FMT % profile.mu_cr,
                   "F_cr": FMT % profile.froude_cr, "digest": profile.digest})


def export_spectrum(path, report) -> None:
    rows = [{"j": j, "nu": nu, "lower": lo, "upper": hi} for j, nu, lo, hi in report.table()]
    write_table(path, rows, {"mu": FMT % report.mu})


def export_eulerian(path, fields, profile: LaminarProfile) -> None:
    """Non-dimensional node samples with the physical unit factors in the header."""
    units = profile.current.unit_factors(fields.froude)
    comments = {"F": FMT % fields.froude, "Q": FMT % fields.Q, "P_atm": FMT % fields.P_atm,
                "digest": profile.digest}
    comments.update({f"unit_{k}": FMT % v for k, v in units.items()})
    write_columns(path, {"x": fields.x, "y": fields.y, "u_minus_c": fields.u_rel,
                         "v": fields.v, "psi": fields.psi, "P": fields.P}, comments)


def select_points(n: int, count: int) -> list[int]:
    """``count`` evenly spread indices of 0..n-1, always including both ends."""
    if n == 0:
        return []
    return sorted(set(np.linspace(0, n - 1, min(count, n)).round().astype(int).tolist()))


def emit_plot_data(branch, directory, count: int = 3, n_kappa: int = 50) -> list[Path]:
    """Surface profiles, the (amplitude, F) curve and laminar verification curves."""
    if len(branch) == 0:
        raise ValueError("cannot plot an empty branch")
    out = Path(directory)
    _guard(lambda: out.mkdir(parents=True, exist_ok=True), out)
    profile = branch.points[0].field.profile

    surfaces = out / "surfaces.dat"
    blocks = []
    for i in select_points(len(branch), count):
        p = branch.points[i]
        eta = p.field.h[:, -1] - 1.0
        rows = "\n".join(f"{FMT % x} {FMT % e}" for x, e in zip(p.field.grid.r, eta))
        blocks.append(f"# point {i} F = {FMT % p.froude}\n{rows}")
    _guard(lambda: surfaces.write_text("# x eta\n" + "\n\n\n".join(blocks) + "\n"), surfaces)

    curve = out / "branch_curve.dat"
    write_columns(curve, {"amplitude": [p.crest_height - 1.0 for p in branch.points],
                          "F": [p.froude for p in branch.points]})

    F_ref = branch.points[-1].froude
    floor = -2.0 * profile.Gamma_min
    lo = max(profile.lam - 0.5, floor + 0.05 * (profile.lam - floor))
    kappas = np.linspace(lo, profile.lam + 0.5, n_kappa)
    verify = out / "laminar_curves.dat"
    write_columns(verify, {
        "kappa": kappas,
        "mu": [mu_of_kappa(profile, k) for k in kappas],
        "flow_force": [laminar_flow_force(profile, k, F_ref) for k in kappas],
        "surface_height": [laminar_height(profile, k)[-1] for k in kappas],
    }, {"F": FMT % F_ref})
    return [surfaces, curve, verify]


def read_surfaces(path) -> list[np.ndarray]:
    """Blocks of (x, eta) written by emit_plot_data."""
    text = _guard(lambda: Path(path).read_text(), path)
    out = []
    for block in text.split("\n\n\n"):
        rows = [ln.split() for ln in block.splitlines() if ln and not ln.startswith("#")]
        if rows:
            out.append(np.array(rows, dtype=float))
    return out
