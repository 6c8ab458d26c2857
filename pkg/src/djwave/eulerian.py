"""Eulerian fields recovered from a height function, and the reverse map.

With (x, y) = (r, h(r, s) - 1) and psi = -s the relative velocity is

    u - c = -1 / h_s,    v = -h_r / h_s.

On the surface h_s is taken from the Bernoulli condition
(1 + h_r^2) / h_s^2 = Q - 2 mu h with Q = lam + 2 mu, so the surface pressure
equals P_atm exactly.  Interior h_s uses the node estimate of the solver.
The pressure follows from Bernoulli's law,

    P = -((u - c)^2 + v^2) / 2 - mu (y + 1) + Gamma(s) + Q / 2 + P_atm,

so E = Q / 2 + P_atm everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InversionError, StagnationError
from .height import HeightField, stencil

#: Accuracy of the monotone column inverter on data it interpolates exactly.
INTERPOLATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EulerianFields:
    """Samples on the image of the (r, s) grid; arrays have the grid shape."""

    x: np.ndarray
    y: np.ndarray
    u_rel: np.ndarray       # u - c
    v: np.ndarray
    psi: np.ndarray
    P: np.ndarray
    Q: float
    P_atm: float
    froude: float
    source: HeightField

    @property
    def eta(self) -> np.ndarray:
        return self.y[:, -1]

    @property
    def E(self) -> np.ndarray:
        gamma_part = self.source.profile.Gamma[None, :]
        return 0.5 * (self.u_rel ** 2 + self.v ** 2) + (self.y + 1.0) / self.froude ** 2 \
            + self.P - gamma_part

    def mirrored(self) -> "EulerianFields":
        """Fields on the full symmetric domain, x from -L to L."""
        def even(a):
            return np.concatenate([a[:0:-1], a])

        def odd(a):
            return np.concatenate([-a[:0:-1], a])

        return EulerianFields(x=odd(self.x), y=even(self.y), u_rel=even(self.u_rel),
                              v=odd(self.v), psi=even(self.psi), P=even(self.P), Q=self.Q,
                              P_atm=self.P_atm, froude=self.froude, source=self.source)


def node_slopes(field: HeightField, froude: float, floor: float = 1e-6):
    """(h_r, h_s) at every node, with the surface h_s from Bernoulli."""
    st = stencil(field)
    h = field.h
    h_r = st.node_phi_r(field.phi)
    h_s = field.profile.Hs[None, :] + st.node_phi_s(field.phi)
    mu = froude ** -2
    Q = field.profile.lam + 2.0 * mu
    head = Q - 2.0 * mu * h[:, -1]
    if np.any(head <= 0):
        i = int(np.argmax(head <= 0))
        raise StagnationError(f"surface lies above the stagnation level at column {i}",
                              node=(i, field.grid.n_s))
    h_s[:, -1] = np.sqrt((1.0 + h_r[:, -1] ** 2) / head)
    bad = np.argwhere(h_s <= floor)
    if bad.size:
        i, j = bad[0]
        raise StagnationError(f"h_s <= {floor:g} at node ({i}, {j})", node=(int(i), int(j)))
    return h_r, h_s


def bernoulli_constant(profile, froude: float) -> float:
    return float(profile.lam + 2.0 * froude ** -2)


def to_eulerian(field: HeightField, froude: float, P_atm: float = 0.0) -> EulerianFields:
    h_r, h_s = node_slopes(field, froude)
    mu = froude ** -2
    Q = bernoulli_constant(field.profile, froude)
    x = np.broadcast_to(field.grid.r[:, None], field.grid.shape).copy()
    y = field.h - 1.0
    u_rel = -1.0 / h_s
    v = -h_r / h_s
    psi = np.broadcast_to(-field.profile.s[None, :], field.grid.shape).copy()
    P = -0.5 * (u_rel ** 2 + v ** 2) - mu * (y + 1.0) + field.profile.Gamma[None, :] \
        + 0.5 * Q + P_atm
    return EulerianFields(x=x, y=y, u_rel=u_rel, v=v, psi=psi, P=P, Q=Q, P_atm=float(P_atm),
                          froude=float(froude), source=field)


def pressure_field(field: HeightField, froude: float, P_atm: float = 0.0):
    """(P at the nodes, Q)."""
    fields = to_eulerian(field, froude, P_atm)
    return fields.P, fields.Q


@dataclass(frozen=True)
class BoundReport:
    gamma_plus: float
    pressure_min: float
    velocity_max: float
    velocity_limit: float
    tol: float

    @property
    def velocity_slack(self) -> float:
        return self.velocity_limit - self.velocity_max

    @property
    def pressure_passes(self) -> bool:
        return self.pressure_min >= -self.tol

    @property
    def velocity_passes(self) -> bool:
        return self.velocity_slack >= -self.tol

    @property
    def passes(self) -> bool:
        return self.pressure_passes and self.velocity_passes


def bound_checks(fields: EulerianFields, profile, froude_floor: float | None = None,
                 tol: float = 1e-8) -> BoundReport:
    """Pressure bound P - P_atm + |gamma_+| psi / 2 >= 0 and the speed bound.

    The speed bound is (u - c)^2 + v^2 <= 2 |gamma_+| + 2 / F0 + 2 |E|, with
    F0 = F_cr unless given.
    """
    F0 = profile.froude_cr if froude_floor is None else froude_floor
    gamma_plus = max(float(np.max(profile.gamma)), 0.0)
    expr = fields.P - fields.P_atm + 0.5 * gamma_plus * fields.psi
    speed2 = fields.u_rel ** 2 + fields.v ** 2
    limit = 2.0 * gamma_plus + 2.0 / F0 + 2.0 * float(np.max(np.abs(fields.E)))
    return BoundReport(gamma_plus=gamma_plus, pressure_min=float(np.min(expr)),
                       velocity_max=float(np.max(speed2)), velocity_limit=limit, tol=tol)


def stream_from_velocity(fields: EulerianFields) -> np.ndarray:
    """psi per column by integrating psi_y = u - c upward from psi = 1 on the bed.

    The integrand is interpolated monotonically in y, so the result carries
    the interpolation error of that quadrature.
    """
    out = np.empty_like(fields.y)
    for i in range(fields.y.shape[0]):
        spline = PchipInterpolator(fields.y[i], fields.u_rel[i])
        anti = spline.antiderivative()
        out[i] = 1.0 + anti(fields.y[i]) - anti(fields.y[i, 0])
    return out


@dataclass(frozen=True, eq=False)
class RoundTrip:
    field: HeightField
    error: float


def roundtrip(fields: EulerianFields) -> RoundTrip:
    """Recover h by inverting y -> psi per column and compare with the source."""
    src = fields.source
    s_target = src.profile.s
    h = np.empty_like(fields.y)
    for i in range(fields.y.shape[0]):
        s_col = -fields.psi[i]
        y_col = fields.y[i]
        if np.any(np.diff(s_col) <= 0) or np.any(np.diff(y_col) <= 0):
            raise InversionError(f"psi is not strictly monotone in y on column {i}")
        h[i] = PchipInterpolator(s_col, y_col)(s_target) + 1.0
    phi = h - src.profile.H[None, :]
    phi[:, 0] = 0.0
    rebuilt = src.with_phi(phi)
    return RoundTrip(field=rebuilt, error=float(np.max(np.abs(h - src.h))))


def kink_location(fields: EulerianFields, column: int = 0) -> int:
    """Node where the slope of (u - c) against y changes most, interior nodes only."""
    y, w = fields.y[column], fields.u_rel[column]
    slope = np.diff(w) / np.diff(y)
    jump = np.abs(np.diff(slope))
    # jump[k] sits at node k + 1; skip the nodes next to bed and surface
    interior = jump[1:-1]
    return int(np.argmax(interior)) + 2
