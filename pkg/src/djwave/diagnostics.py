"""Checks of the qualitative properties of computed waves.

Flags are tri-state: ``PASS``, ``FAIL`` or ``NA`` (the property is vacuous,
for instance elevation of the trivial flow).  The qualitative tolerance is
tol_q = 1e-8 times the wave amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .background import LaminarProfile, laminar_height
from .eulerian import bound_checks, to_eulerian
from .height import HeightField, stencil

PASS, FAIL, NA = "pass", "fail", "n/a"
TOL_Q = 1e-8


def _flag(ok: bool) -> str:
    return PASS if ok else FAIL


_GAUSS = np.array([-0.5, 0.5]) / np.sqrt(3.0)


def flow_force_columns(fld: HeightField, froude: float) -> np.ndarray:
    """S at every r-node.

    S = int [(1 - h_r^2) / (2 h_s) + h_s / (2 H_s^2)] ds - mu ((h(0) - 1)^2 - 1) / 2.
    The gravity term is exact since (h - 1) h_s = ((h - 1)^2 / 2)_s, and so is
    the h_s / (2 H_s^2) term for cell-wise H_s.  The first term uses two-point
    Gauss quadrature per cell with h_s linear and h_r quadratic in s; the
    slope of h_s is taken from the deflection relative to the far column, so
    r-independent (laminar) fields reduce to the cell averages exactly.
    """
    st = stencil(fld)
    phi = fld.phi
    ds, s, N = st.ds, fld.grid.s, st.N
    D = np.diff(phi, axis=1) / ds[None, :]
    centre = 0.5 * (s[:-1] + s[1:])
    rel = D - D[-1][None, :]
    slope = np.empty_like(D)
    slope[:, 1:-1] = (rel[:, 2:] - rel[:, :-2]) / (centre[2:] - centre[:-2])[None, :]
    slope[:, 0] = (rel[:, 1] - rel[:, 0]) / (centre[1] - centre[0])
    slope[:, -1] = (rel[:, -1] - rel[:, -2]) / (centre[-1] - centre[-2])
    pr = st.node_phi_r(phi)
    j = np.arange(N)
    k = np.where(j + 2 <= N, j + 2, j - 1)
    x0, x1, x2 = s[j], s[j + 1], s[k]
    kinetic = np.zeros(phi.shape[0])
    for g in _GAUSS:
        sg = centre + g * ds
        q = st.Hc[None, :] + D + slope * (g * ds)[None, :]
        l0 = (sg - x1) * (sg - x2) / ((x0 - x1) * (x0 - x2))
        l1 = (sg - x0) * (sg - x2) / ((x1 - x0) * (x1 - x2))
        l2 = (sg - x0) * (sg - x1) / ((x2 - x0) * (x2 - x1))
        p = pr[:, j] * l0 + pr[:, j + 1] * l1 + pr[:, k] * l2
        kinetic += 0.5 * (((1.0 - p ** 2) / (2.0 * q)) @ ds)
    q_bar = st.Hc[None, :] + D
    potential = (q_bar / (2.0 * st.Hc[None, :] ** 2)) @ ds
    top = fld.h[:, -1]
    return kinetic + potential - 0.5 * froude ** -2 * ((top - 1.0) ** 2 - 1.0)


def flow_force(fld: HeightField, froude: float, column: int = 0) -> float:
    return float(flow_force_columns(fld, froude)[column])


def laminar_flow_force(profile: LaminarProfile, kappa: float, froude: float) -> float:
    """Closed form of S on the laminar state H(.; kappa)."""
    top = laminar_height(profile, kappa)[-1]
    mu = froude ** -2
    root = np.sqrt(kappa + 2.0 * profile.Gamma_cell)
    return float(0.5 * (profile.lam - kappa) * top - 0.5 * mu * (top - 1.0) ** 2
                 + 0.5 * mu + np.sum(profile.ds * root))


def laminar_field(profile: LaminarProfile, kappa: float, grid) -> HeightField:
    """The laminar state H(.; kappa) as a deflection on ``grid`` (no far-field row)."""
    phi = np.tile(laminar_height(profile, kappa) - profile.H, (grid.shape[0], 1))
    phi[:, 0] = 0.0
    return HeightField(phi=phi, grid=grid, profile=profile)


@dataclass(frozen=True)
class QualitativeFlags:
    elevation: str
    monotone: str
    symmetry: str = "structural"


def qualitative_check(fld: HeightField, froude: float | None = None) -> QualitativeFlags:
    """Elevation phi > 0 above the bed and phi_r < 0 for r > 0, within tol_q."""
    amp = fld.amplitude
    if amp == 0:
        return QualitativeFlags(elevation=NA, monotone=NA)
    tol = TOL_Q * amp
    phi = fld.phi[:-1, 1:]
    slopes = np.diff(fld.phi[:, 1:], axis=0) / np.diff(fld.grid.r)[:, None]
    return QualitativeFlags(elevation=_flag(float(np.min(phi)) > -tol),
                            monotone=_flag(float(np.max(slopes)) < tol))


@dataclass(frozen=True)
class FroudeBound:
    """F^2 <= (2/pi) max H_s^2 max h_s on a column; crest column authoritative."""

    froude: float
    crest_rhs: float
    surface_rhs: float
    trivial: bool
    tol: float

    @property
    def slack(self) -> float:
        return self.crest_rhs - self.froude ** 2

    @property
    def surface_slack(self) -> float:
        return self.surface_rhs - self.froude ** 2

    @property
    def ratio(self) -> float:
        """F^2 over the crest bound; at most 1 when the bound holds."""
        return self.froude ** 2 / self.crest_rhs

    @property
    def flag(self) -> str:
        if self.trivial:
            return NA
        return _flag(self.slack >= -self.tol)


def froude_bound_check(fld: HeightField, froude: float) -> FroudeBound:
    st = stencil(fld)
    q = st.Hc[None, :] + np.diff(fld.phi, axis=1) / st.ds[None, :]
    hs_sup2 = float(np.max(fld.profile.Hs)) ** 2
    factor = 2.0 / np.pi * hs_sup2
    amp = fld.amplitude
    return FroudeBound(froude=float(froude), crest_rhs=factor * float(np.max(q[0])),
                       surface_rhs=factor * float(np.max(q[:, -1])), trivial=amp == 0,
                       tol=TOL_Q * max(amp, 1.0))


def cell_slopes(fld: HeightField) -> np.ndarray:
    """h_s = H_s + phi_s on every (column, s-cell)."""
    st = stencil(fld)
    return st.Hc[None, :] + np.diff(fld.phi, axis=1) / st.ds[None, :]


@dataclass(frozen=True)
class StagnationMeasures:
    min_hs: float
    max_hs: float

    @property
    def min_speed(self) -> float:
        """min (c - u) = 1 / max h_s."""
        return 1.0 / self.max_hs


def stagnation_measures(fld: HeightField, hs: np.ndarray | None = None) -> StagnationMeasures:
    hs = cell_slopes(fld) if hs is None else np.asarray(hs)
    return StagnationMeasures(min_hs=float(np.min(hs)), max_hs=float(np.max(hs)))


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    froude: float
    flow_force: np.ndarray = field(repr=False)
    flags: QualitativeFlags = None
    margin: float = 0.0
    froude_bound: FroudeBound = None
    stagnation: StagnationMeasures = None
    pressure_min: float = 0.0
    velocity_slack: float = 0.0
    bound_tol: float = TOL_Q

    @property
    def flow_force_spread(self) -> float:
        """(max - min) / |mean| of the column values."""
        S = self.flow_force
        return float((S.max() - S.min()) / abs(S.mean()))

    @property
    def pressure_flag(self) -> str:
        return _flag(self.pressure_min >= -self.bound_tol)

    @property
    def velocity_flag(self) -> str:
        return _flag(self.velocity_slack >= -self.bound_tol)

    def summary(self) -> dict:
        return {
            "F": self.froude,
            "F_minus_Fcr": self.margin,
            "flow_force": float(np.mean(self.flow_force)),
            "flow_force_spread": self.flow_force_spread,
            "elevation": self.flags.elevation,
            "monotone": self.flags.monotone,
            "symmetry": self.flags.symmetry,
            "froude_bound_slack": self.froude_bound.slack,
            "froude_bound_surface_slack": self.froude_bound.surface_slack,
            "froude_bound": self.froude_bound.flag,
            "froude_bound_column": "crest",
            "min_hs": self.stagnation.min_hs,
            "max_hs": self.stagnation.max_hs,
            "min_c_minus_u": self.stagnation.min_speed,
            "pressure_bound_min": self.pressure_min,
            "pressure_bound": self.pressure_flag,
            "velocity_bound_slack": self.velocity_slack,
            "velocity_bound": self.velocity_flag,
        }

    def text(self) -> str:
        return "\n".join(f"{k} = {v!r}" if isinstance(v, str) else f"{k} = {v:.17g}"
                         for k, v in self.summary().items())


def diagnose(fld: HeightField, froude: float, P_atm: float = 0.0) -> DiagnosticsReport:
    fields = to_eulerian(fld, froude, P_atm)
    bounds = bound_checks(fields, fld.profile)
    return DiagnosticsReport(
        froude=float(froude), flow_force=flow_force_columns(fld, froude),
        flags=qualitative_check(fld, froude), margin=float(froude - fld.profile.froude_cr),
        froude_bound=froude_bound_check(fld, froude), stagnation=stagnation_measures(fld),
        pressure_min=bounds.pressure_min, velocity_slack=bounds.velocity_slack,
        bound_tol=bounds.tol)
