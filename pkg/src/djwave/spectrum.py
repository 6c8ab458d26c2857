"""Linearized laminar eigenvalue problem.

The operator is -(Phi_s / H_s^3)_s = nu Phi / H_s on (-1, 0) with Phi(-1) = 0
and the Robin condition -Phi_s/H_s^3 + mu Phi = 0 at s = 0.  In the travel-time
variable t = int ds / H_s it becomes the planar system

    a' = H_s^4 b,    b' = -nu a,    (a, b)(0) = (0, 1),

with a = H_s(-1)^3 Phi and b = H_s(-1)^3 Phi_s / H_s^3.  Eigenvalues are the
zeros of b(t0) - mu a(t0), i.e. B(nu) = b/a = mu; Dirichlet poles are the
zeros of a(t0).

H_s is constant on every s-cell, so each cell is integrated with classical
RK4 at a fixed step.  For a linear system one RK4 step is the matrix
c0 I + c1 (h A) with theta = h^2 p q, c0 = 1 - theta/2 + theta^2/24 and
c1 = 1 - theta/6; m steps are applied as a matrix power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .background import LaminarProfile
from .errors import IntegrationError, SpectralScanError

#: Target for omega * h, the RK4 phase increment per step.
PHASE_PER_STEP = 0.005
MAX_STEPS_PER_CELL = 200_000


def critical_mode(profile: LaminarProfile) -> np.ndarray:
    """int_{-1}^s H_s^3 at the nodes (first component of the centre eigenvector)."""
    return np.concatenate([[0.0], np.cumsum(profile.ds * profile.Hs_cell ** 3)])


def cell_durations(profile: LaminarProfile) -> np.ndarray:
    return profile.ds / profile.Hs_cell


def _steps_per_cell(profile, p, q) -> int:
    omega_tau = np.sqrt(np.abs(p * q)) * cell_durations(profile)[:, None]
    m = int(np.ceil(np.max(omega_tau) / PHASE_PER_STEP)) if omega_tau.size else 1
    if m > MAX_STEPS_PER_CELL:
        raise IntegrationError(f"step size underflow: {m} RK4 steps per cell needed")
    return max(m, 1)


def _propagate(profile, p, q, a0, b0, steps=None):
    """Node values of (a, b) for a' = p b, b' = -q a, batched over the last axis.

    ``p`` has shape (n,), ``q`` shape (n, batch); ``steps`` RK4 steps per cell.
    """
    p = np.asarray(p, dtype=float)[:, None]
    q = np.asarray(q, dtype=float)
    if steps is None:
        steps = _steps_per_cell(profile, p, q)
    h = (cell_durations(profile) / steps)[:, None]
    theta = h * h * p * q
    c0 = 1.0 - theta / 2.0 + theta * theta / 24.0
    c1 = 1.0 - theta / 6.0
    step = np.empty(theta.shape + (2, 2))
    step[..., 0, 0] = c0
    step[..., 0, 1] = c1 * h * p
    step[..., 1, 0] = -c1 * h * q
    step[..., 1, 1] = c0
    cell_map = np.linalg.matrix_power(step, steps)
    n, batch = theta.shape
    a = np.empty((n + 1, batch))
    b = np.empty((n + 1, batch))
    a[0], b[0] = a0, b0
    for j in range(n):
        m = cell_map[j]
        a[j + 1] = m[:, 0, 0] * a[j] + m[:, 0, 1] * b[j]
        b[j + 1] = m[:, 1, 0] * a[j] + m[:, 1, 1] * b[j]
    return a, b


@dataclass(frozen=True, eq=False)
class ShootingState:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    nu: float

    @property
    def t0(self) -> float:
        return float(self.t[-1])


def phi_ivp(profile: LaminarProfile) -> np.ndarray:
    """Phi with Phi(-1) = 0, Phi_s(-1) = 1 and (Phi_s / H_s^3)_s = 0."""
    return critical_mode(profile) / profile.Hs_cell[0] ** 3


def a_of_mu(profile: LaminarProfile, mu: float) -> float:
    """A(mu) = -Phi_s(0)/H_s(0)^3 + mu Phi(0), using the top-cell slope."""
    phi = phi_ivp(profile)
    top_slope = profile.Hs_cell[-1] ** 3 / profile.Hs_cell[0] ** 3
    return float(-top_slope / profile.Hs_cell[-1] ** 3 + mu * phi[-1])


def _shoot_batch(profile, nus, steps=None):
    nus = np.atleast_1d(np.asarray(nus, dtype=float))
    p = profile.Hs_cell ** 4
    q = np.broadcast_to(nus, (profile.n_s, nus.size))
    return _propagate(profile, p, q, np.zeros(nus.size), np.ones(nus.size), steps)


def shoot(profile: LaminarProfile, nu: float, steps_per_cell: int | None = None) -> ShootingState:
    a, b = _shoot_batch(profile, [nu], steps_per_cell)
    t = np.concatenate([[0.0], np.cumsum(cell_durations(profile))])
    return ShootingState(t=t, a=a[:, 0], b=b[:, 0], nu=float(nu))


def b_ratio(profile: LaminarProfile, nu, steps_per_cell: int | None = None):
    """B(nu) = b(t0) / a(t0)."""
    a, b = _shoot_batch(profile, nu, steps_per_cell)
    return b[-1] / a[-1]


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    mu: float
    eigenvalues: np.ndarray
    poles: np.ndarray
    brackets: tuple
    eigenfunction: np.ndarray

    def table(self) -> list[tuple]:
        """Rows (j, nu_j, lower bracket, upper bracket)."""
        return [(j, float(v), lo, hi)
                for j, (v, (lo, hi)) in enumerate(zip(self.eigenvalues, self.brackets))]


def _sign_changes(grid, values):
    roots, brackets = [], []
    for i in range(len(grid) - 1):
        if values[i] == 0.0:
            roots.append(grid[i])
        elif values[i] * values[i + 1] < 0:
            brackets.append((grid[i], grid[i + 1]))
    return roots, brackets


def _refine(func, brackets, exact):
    out = list(exact)
    for lo, hi in brackets:
        out.append(brentq(func, lo, hi, xtol=1e-15, rtol=1e-13, maxiter=500))
    return sorted(out)


def eigenvalues(profile: LaminarProfile, mu: float, k: int = 3,
                steps_per_cell: int | None = None,
                nu1_estimate: float = 20.0) -> SpectrumReport:
    """First k eigenvalues nu_0 < ... < nu_{k-1}, bracketed by Dirichlet poles."""
    if k < 1:
        raise ValueError("k must be at least 1")

    steps = steps_per_cell

    def characteristic(nu):
        a, b = _shoot_batch(profile, nu, steps)
        return b[-1] - mu * a[-1]

    def terminal_a(nu):
        return _shoot_batch(profile, nu, steps)[0][-1]

    lower = 4.0 * abs(nu1_estimate)
    upper = ((k + 1.5) * np.pi) ** 2
    for _ in range(8):
        # uniform in sqrt|nu|, where the shooting solution oscillates evenly
        x_neg = np.linspace(np.sqrt(lower), 0.0, 400, endpoint=False)
        x_pos = np.arange(0.0, np.sqrt(upper) + 0.02, 0.02)
        grid = np.concatenate([-x_neg ** 2, x_pos ** 2])
        if steps_per_cell is None:
            # one step size for scan and refinement keeps brackets valid
            steps = _steps_per_cell(profile, profile.Hs_cell[:, None] ** 4,
                                    np.array([[max(lower, upper)]]))
        char = characteristic(grid)
        avals = terminal_a(grid)
        exact_e, br_e = _sign_changes(grid, char)
        exact_p, br_p = _sign_changes(grid[grid > 0], avals[grid > 0])
        if len(exact_e) + len(br_e) >= k and len(exact_p) + len(br_p) >= k \
                and char[0] > 0:
            break
        lower *= 2.0
        upper *= 2.0
    else:
        raise SpectralScanError("could not bracket the requested eigenvalues")

    ev = _refine(lambda v: float(characteristic(v)[0]), br_e, exact_e)[:k]
    poles = _refine(lambda v: float(terminal_a(v)[0]), br_p, exact_p)[:k]
    edges = [-np.inf] + list(poles)
    brackets = []
    for j, v in enumerate(ev):
        lo, hi = edges[j], edges[j + 1] if j + 1 < len(edges) else np.inf
        if not lo < v < hi:
            raise SpectralScanError(f"eigenvalue {j} = {v} escapes its pole bracket")
        brackets.append((float(lo), float(hi)))
    mode = shoot(profile, ev[0], steps).a / profile.Hs_cell[0] ** 3
    return SpectrumReport(mu=float(mu), eigenvalues=np.array(ev), poles=np.array(poles),
                          brackets=tuple(brackets), eigenfunction=mode)


@dataclass(frozen=True, eq=False)
class AuxiliaryReport:
    eps_a: float
    values: np.ndarray
    slopes: np.ndarray
    positive: bool
    boundary_value: float

    @property
    def boundary_negative(self) -> bool:
        return self.boundary_value < 0

    @property
    def passes(self) -> bool:
        return self.positive and self.boundary_negative


def _auxiliary(profile, mu, eps_a, steps=None) -> AuxiliaryReport:
    p = profile.Hs_cell ** 4
    q = (mu * eps_a * profile.Hs_cell)[:, None]
    a, b = _propagate(profile, p, q, np.array([eps_a]),
                      np.array([profile.Hs_cell[0] ** -3]), steps)
    a, b = a[:, 0], b[:, 0]
    values_ok = np.all(a > 0) if eps_a > 0 else np.all(a[1:] > 0)
    return AuxiliaryReport(eps_a=float(eps_a), values=a, slopes=profile.Hs ** 3 * b,
                           positive=bool(values_ok and np.all(b > 0)),
                           boundary_value=float(-b[-1] + mu * a[-1]))


def auxiliary_phi(profile: LaminarProfile, froude: float, eps_a: float | None = None,
                  steps_per_cell: int | None = None) -> AuxiliaryReport:
    """Solve (P_s / H_s^3)_s + mu eps_a P = 0, P(-1) = eps_a, P_s(-1) = 1.

    Without ``eps_a`` the largest of 1e-2, 1e-3, ... passing both sign
    conditions is used; if none passes the last candidate is reported.
    """
    mu = froude ** -2
    if eps_a is not None:
        if eps_a < 0:
            raise ValueError("eps_a must be non-negative")
        return _auxiliary(profile, mu, eps_a, steps_per_cell)
    report = None
    for exponent in range(2, 13):
        report = _auxiliary(profile, mu, 10.0 ** -exponent, steps_per_cell)
        if report.passes:
            break
    return report


def center_eigenvectors(profile: LaminarProfile) -> tuple[np.ndarray, np.ndarray]:
    """u1 = (int H_s^3, 0) and u2 = (0, int H_s^3 / H_s) at the nodes."""
    mode = critical_mode(profile)
    zeros = np.zeros_like(mode)
    return np.column_stack([mode, zeros]), np.column_stack([zeros, mode / profile.Hs])
