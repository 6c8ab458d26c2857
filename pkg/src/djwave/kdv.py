"""Small-amplitude solitary waves from the KdV reduction.

With mode(s) = int_{-1}^s H_s^3 and 1/F^2 = mu_cr - eps, the leading-order
deflection is

    phi(r, s) = eps * c_A * sech^2(c_W sqrt(eps) r / 2) * mode(s),

    c_A = mode(0)^2 / I5,      I5 = int H_s^5,
    c_W = mode(0) / sqrt(Iw),  Iw = int mode^2 / H_s.

The width factor is fixed by the linear decay rate: nu_0 = c_W^2 eps solves
B(nu) = mu to first order, and sech^2(R/2) decays like exp(-R).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import LaminarProfile
from .errors import DomainError, ParameterError
from .spectrum import critical_mode

#: Decay lengths 1/(c_W sqrt(eps)) the truncated strip must span.
DECAY_LENGTHS = 20.0
EPS_GUESS_MAX = 0.05


@dataclass(frozen=True)
class KdvScaling:
    surface_mode: float
    I5: float
    Iw: float
    amplitude_factor: float
    width_factor: float

    def decay_rate(self, eps: float) -> float:
        return self.width_factor * np.sqrt(eps)

    def min_length(self, eps: float) -> float:
        return DECAY_LENGTHS / self.decay_rate(eps)


def kdv_scaling(profile: LaminarProfile) -> KdvScaling:
    mode = critical_mode(profile)
    ds, hs = profile.ds, profile.Hs_cell
    I5 = float(np.sum(ds * hs ** 5))
    lo, hi = mode[:-1], mode[1:]
    # mode is linear on each cell, so this is exact for the cell representation
    Iw = float(np.sum(ds / hs * (lo * lo + lo * hi + hi * hi) / 3.0))
    top = float(mode[-1])
    return KdvScaling(surface_mode=top, I5=I5, Iw=Iw,
                      amplitude_factor=top ** 2 / I5,
                      width_factor=top / np.sqrt(Iw))


def froude_from_epsilon(profile: LaminarProfile, eps: float) -> float:
    """F with 1/F^2 = mu_cr - eps."""
    if not 0 <= eps < profile.mu_cr:
        raise ParameterError(f"eps = {eps} must lie in [0, mu_cr = {profile.mu_cr})")
    return float((profile.mu_cr - eps) ** -0.5)


def epsilon_from_froude(profile: LaminarProfile, froude: float) -> float:
    return float(profile.mu_cr - froude ** -2)


def reduced_orbit(eps: float, R) -> np.ndarray:
    """Homoclinic orbit sech^2(R/2) of Z'' = Z - 1.5 Z^2."""
    if not eps > 0:
        raise ParameterError("eps must be positive")
    return np.cosh(0.5 * np.asarray(R, dtype=float)) ** -2


def initial_guess(profile: LaminarProfile, eps: float, grid, eps_max: float = EPS_GUESS_MAX):
    """Leading-order KdV deflection sampled on ``grid``."""
    from .height import HeightField

    if not 0 < eps <= eps_max:
        raise ParameterError(f"eps = {eps} outside (0, {eps_max}]")
    scaling = kdv_scaling(profile)
    if grid.L < scaling.min_length(eps):
        raise DomainError(
            f"L = {grid.L:.4g} shorter than {DECAY_LENGTHS:g} decay lengths "
            f"({scaling.min_length(eps):.4g}) at eps = {eps}")
    R = scaling.decay_rate(eps) * grid.r
    amplitude = eps * scaling.amplitude_factor * reduced_orbit(eps, R)
    phi = np.outer(amplitude, critical_mode(profile))
    phi[-1, :] = 0.0
    return HeightField(phi=phi, grid=grid, profile=profile)
