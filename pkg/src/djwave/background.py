"""Laminar background state built from a piecewise-linear shear current.

Lengths are scaled by the depth d and velocities by m/d, with m = F * int U* dy.
In these units the asymptotic relative speed is

    u_rel(y) = U*(y d) d / int U*,   y in [-1, 0],   int u_rel = 1,

and the streamline coordinate s = -psi runs from -1 (bed) to 0 (surface).  The
laminar height H(s) is the inverse of y + 1 -> s, so H_s = 1/u_rel(H - 1).

Every solver works with the cell representation of H_s: on each s-cell the
value is the exact cell average (H(s_{j+1}) - H(s_j)) / ds_j.  The laminar
family, the critical Froude number and the finite-volume scheme all use this
same representation, which makes them mutually consistent to rounding.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import FamilyError, ResolutionError, StagnantBackgroundError

#: Half-width of the window around lambda where mu(kappa) returns mu_cr.
MU_WINDOW = 1e-8


@dataclass(frozen=True)
class BackgroundCurrent:
    """Dimensional shear current U*(y) on [-depth, 0] given by breakpoints."""

    depth: float
    gravity: float
    speed: float
    y: tuple
    u: tuple

    def __post_init__(self):
        y = tuple(float(v) for v in self.y)
        u = tuple(float(v) for v in self.u)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "u", u)
        for name in ("depth", "gravity", "speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if len(y) != len(u) or len(y) < 2:
            raise ValueError("need at least two matching breakpoints")
        if any(b <= a for a, b in zip(y, y[1:])):
            raise ValueError("breakpoints must be strictly increasing in y")
        tol = 1e-12 * self.depth
        if abs(y[0] + self.depth) > tol or abs(y[-1]) > tol:
            raise ValueError("breakpoints must cover y = -depth and y = 0")
        if min(u) <= 0:
            raise StagnantBackgroundError(
                "U* must be positive at every breakpoint (stagnant background)")

    @property
    def flux(self) -> float:
        """int_{-d}^0 U* dy, exact for the piecewise-linear current."""
        return float(np.trapezoid(self.u, self.y))

    def unit_factors(self, froude: float) -> dict:
        """Multipliers turning non-dimensional lengths, velocities, pressures physical."""
        m = froude * self.flux
        return {"length": self.depth, "velocity": m / self.depth,
                "pressure": (m / self.depth) ** 2}


@dataclass(frozen=True, eq=False)
class LaminarProfile:
    """Non-dimensional laminar state on the s-grid.

    Node arrays have length n_s + 1, cell arrays length n_s.  ``jumps`` holds
    the node indices where the vorticity gamma changes value.
    """

    s: np.ndarray
    H: np.ndarray
    Hs: np.ndarray
    Gamma: np.ndarray
    gamma: np.ndarray
    Hs_cell: np.ndarray
    Gamma_cell: np.ndarray
    lam: float
    Gamma_min: float
    mu_cr: float
    jumps: tuple
    current: BackgroundCurrent = field(repr=False)

    @property
    def n_s(self) -> int:
        return len(self.s) - 1

    @property
    def ds(self) -> np.ndarray:
        return np.diff(self.s)

    @property
    def froude_cr(self) -> float:
        return self.mu_cr ** -0.5

    @property
    def digest(self) -> str:
        """Short hash identifying the profile in export headers."""
        sha = hashlib.sha256()
        for arr in (self.s, self.H, self.Hs_cell):
            sha.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return sha.hexdigest()[:16]

    def table(self) -> np.ndarray:
        """Columns (s, H, H_s, Gamma, gamma); gamma is the value on the cell above."""
        gamma_nodes = np.append(self.gamma, self.gamma[-1])
        return np.column_stack([self.s, self.H, self.Hs, self.Gamma, gamma_nodes])


def _kink_breakpoints(current: BackgroundCurrent):
    """Scaled breakpoints keeping only genuine slope changes."""
    y = np.asarray(current.y) / current.depth
    u = np.asarray(current.u) * current.depth / current.flux
    keep = [0]
    for k in range(1, len(y) - 1):
        left = (u[k] - u[keep[-1]]) / (y[k] - y[keep[-1]])
        right = (u[k + 1] - u[k]) / (y[k + 1] - y[k])
        if abs(left - right) > 1e-12 * max(1.0, abs(left), abs(right)):
            keep.append(k)
    keep.append(len(y) - 1)
    return y[keep], u[keep]


def _allocate_cells(lengths: np.ndarray, n_s: int, minimum: int) -> np.ndarray:
    """Split n_s cells among segments proportionally, at least ``minimum`` each."""
    if minimum * len(lengths) > n_s:
        raise ResolutionError(
            f"n_s = {n_s} cannot give {minimum} cells to each of {len(lengths)} layers")
    ideal = lengths / lengths.sum() * n_s
    counts = np.maximum(np.floor(ideal).astype(int), minimum)
    while counts.sum() > n_s:
        k = np.argmax(np.where(counts > minimum, counts - ideal, -np.inf))
        counts[k] -= 1
    while counts.sum() < n_s:
        counts[np.argmax(ideal - counts)] += 1
    return counts


def _surface_map(grading: float):
    """Maps xi in [0, 1] to s in [-1, 0], clustering nodes at the surface."""
    if grading == 0:
        return (lambda xi: xi - 1.0), (lambda s: s + 1.0)
    scale = np.sinh(grading)

    def to_s(xi):
        return -np.sinh(grading * (1.0 - xi)) / scale

    def to_xi(s):
        return 1.0 - np.arcsinh(-s * scale) / grading

    return to_s, to_xi


def build_profile(current: BackgroundCurrent, n_s: int = 64,
                  min_cells_per_layer: int = 2, surface_grading: float = 0.0) -> LaminarProfile:
    """Laminar profile on an s-grid whose faces contain every vorticity jump.

    Nodes are uniform in xi, where s = -sinh(g (1 - xi)) / sinh(g) for
    ``surface_grading`` g > 0 (g = 0 is uniform in s).
    """
    if n_s < 16:
        raise ResolutionError("n_s must be at least 16")
    if surface_grading < 0:
        raise ValueError("surface_grading must be non-negative")
    yb, ub = _kink_breakpoints(current)
    seg_ds = 0.5 * (ub[1:] + ub[:-1]) * np.diff(yb)
    sb = np.concatenate([[-1.0], -1.0 + np.cumsum(seg_ds)])
    sb[-1] = 0.0
    to_s, to_xi = _surface_map(surface_grading)
    xib = to_xi(sb)
    xib[0], xib[-1] = 0.0, 1.0
    counts = _allocate_cells(np.diff(xib), n_s, min_cells_per_layer)

    s_parts, h_parts, hs_parts, jumps = [], [], [], []
    start = 0
    for k, n in enumerate(counts):
        a = ub[k]
        slope = (ub[k + 1] - ub[k]) / (yb[k + 1] - yb[k])
        sigma = to_s(np.linspace(xib[k], xib[k + 1], n + 1)) - sb[k]
        sigma[0], sigma[-1] = 0.0, seg_ds[k]
        if k < len(counts) - 1:
            sigma = sigma[:-1]
        # invert sigma = a t + slope t^2 / 2 without cancellation
        t = 2.0 * sigma / (a + np.sqrt(a * a + 2.0 * slope * sigma))
        s_parts.append(sb[k] + sigma)
        h_parts.append(yb[k] + 1.0 + t)
        hs_parts.append(1.0 / (a + slope * t))
        start += n
        if k < len(counts) - 1:
            jumps.append(start)
    s = np.concatenate(s_parts)
    H = np.concatenate(h_parts)
    Hs = np.concatenate(hs_parts)
    s[0], s[-1], H[0], H[-1] = -1.0, 0.0, 0.0, 1.0

    ds = np.diff(s)
    Hs_cell = np.diff(H) / ds
    lam = 1.0 / Hs[-1] ** 2
    Gamma = 0.5 / Hs ** 2 - 0.5 * lam
    gamma = np.diff(Gamma) / ds
    Gamma_cell = 0.5 / Hs_cell ** 2 - 0.5 * lam
    mu_cr = 1.0 / np.sum(ds * Hs_cell ** 3)
    for arr in (s, H, Hs, Gamma, gamma, Hs_cell, Gamma_cell):
        arr.setflags(write=False)
    return LaminarProfile(s=s, H=H, Hs=Hs, Gamma=Gamma, gamma=gamma,
                          Hs_cell=Hs_cell, Gamma_cell=Gamma_cell, lam=float(lam),
                          Gamma_min=float(Gamma_cell.min()), mu_cr=float(mu_cr),
                          jumps=tuple(jumps), current=current)


def _check_family(profile: LaminarProfile, kappa: float) -> None:
    if not kappa > -2.0 * profile.Gamma_min:
        raise FamilyError(
            f"kappa = {kappa} must exceed -2 Gamma_min = {-2.0 * profile.Gamma_min}")


def laminar_height(profile: LaminarProfile, kappa: float, s=None):
    """H(s; kappa) = int_{-1}^s (kappa + 2 Gamma)^(-1/2), exact for cell-wise Gamma.

    With ``s=None`` the node values are returned.
    """
    _check_family(profile, kappa)
    slope = (kappa + 2.0 * profile.Gamma_cell) ** -0.5
    nodes = np.concatenate([[0.0], np.cumsum(profile.ds * slope)])
    if s is None:
        return nodes
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < -1.0) or np.any(s_arr > 0.0):
        raise ValueError("s must lie in [-1, 0]")
    out = np.interp(s_arr, profile.s, nodes)
    return float(out) if out.ndim == 0 else out


def mu_of_kappa(profile: LaminarProfile, kappa: float) -> float:
    """mu(kappa) = (kappa - lam) / (2 (1 - H(0; kappa))), continuous through lam.

    The difference 1 - H(0; kappa) is summed cell by cell in a form free of
    cancellation, so the quotient stays accurate arbitrarily close to lam.
    """
    _check_family(profile, kappa)
    delta = kappa - profile.lam
    if abs(delta) < MU_WINDOW * max(1.0, abs(profile.lam)):
        return profile.mu_cr
    x = profile.Hs_cell ** -2
    root_x, root_xd = np.sqrt(x), np.sqrt(x + delta)
    weights = profile.ds / (root_x * root_xd * (root_x + root_xd))
    return float(0.5 / np.sum(weights))


def critical_froude(profile: LaminarProfile) -> tuple[float, float]:
    """(mu_cr, F_cr) with mu_cr = 1 / int H_s^3."""
    return profile.mu_cr, profile.mu_cr ** -0.5


def kappa_of_surface_height(profile: LaminarProfile, h0: float) -> float:
    """The unique kappa with H(0; kappa) = h0, by bracketed root search."""
    if not h0 > 0:
        raise FamilyError("surface height must be positive")
    if h0 == 1.0:
        return profile.lam

    def gap(kappa):
        return laminar_height(profile, kappa)[-1] - h0

    floor = -2.0 * profile.Gamma_min
    lo, hi = profile.lam, profile.lam
    if h0 < 1.0:
        step = max(1.0, abs(profile.lam))
        for _ in range(200):
            hi = profile.lam + step
            if gap(hi) < 0:
                break
            lo, step = hi, 2.0 * step
        else:
            raise FamilyError(f"h0 = {h0} not attainable")
    else:
        width = profile.lam - floor
        for _ in range(200):
            width *= 0.5
            lo = floor + width
            if gap(lo) > 0:
                break
            hi = lo
        else:
            raise FamilyError(f"h0 = {h0} not attainable")
    kappa = brentq(gap, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(gap(kappa)) > 1e-10:
        raise FamilyError(f"root search for h0 = {h0} did not reach tolerance")
    return float(kappa)
