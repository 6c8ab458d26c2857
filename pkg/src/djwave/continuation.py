"""Pseudo-arclength continuation of the solitary-wave branch in (phi, F).

The arclength uses the weighted norm |x|^2 = sum_nodes A_ij phi_ij^2 + F^2,
with A_ij the control-volume area of node (i, j).  Each step is an Euler
predictor along the tangent followed by Newton on the bordered system

    [ J     R_F ] [dphi]   [ -R                  ]
    [ t_phi^T A   t_F ] [dF  ] = [ ds - t.(x - x0) ]
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .background import LaminarProfile
from .diagnostics import DiagnosticsReport, cell_slopes, diagnose
from .errors import (ConvergenceError, DomainError, ParameterError, StagnationError,
                     StepError, TangentError)
from .height import (HeightField, SolverOptions, decay_check, extend_domain,
                     froude_derivative, jacobian, make_grid, newton_solve, residual,
                     roundoff_floor, stencil)
from .kdv import froude_from_epsilon, initial_guess, kdv_scaling

STAGNATION = "stagnation-threshold"
STEP_FLOOR = "step-floor"
BUDGET = "budget"
DIVERGENCE = "divergence"

TAIL_LIMIT = 1e-5
CENTRAL_WINDOW = 2.0


@dataclass(frozen=True)
class ContinuationOptions:
    ds: float = 0.02
    ds_min: float = 1e-5
    ds_max: float = 0.05
    tau: float = 0.2
    max_steps: int = 200
    n_r: int = 320
    grading: float = 6.0
    length: float = 0.0             # seed strip length; 0 uses the decay length
    length_factor: float = 1.05
    alpha: float = 0.5
    corrector_tol: float = 1e-10
    corrector_iter: int = 8
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not 0 < self.ds_min <= self.ds <= self.ds_max:
            raise ValueError("need 0 < ds_min <= ds <= ds_max")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not 0 < self.alpha <= 0.5:
            raise ValueError("alpha must lie in (0, 0.5]")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")


@dataclass(frozen=True, eq=False)
class BranchPoint:
    field: HeightField
    froude: float
    t: float
    diagnostics: DiagnosticsReport
    N: float

    @property
    def crest_height(self) -> float:
        return float(self.field.h[0, -1])

    @property
    def epsilon(self) -> float:
        return float(self.field.profile.mu_cr - self.froude ** -2)


@dataclass(frozen=True, eq=False)
class Branch:
    points: tuple
    reason: str
    message: str = ""

    def __len__(self):
        return len(self.points)

    def table(self) -> list[dict]:
        rows = []
        for p in self.points:
            d = p.diagnostics
            rows.append({
                "t": p.t, "F": p.froude, "eps": p.epsilon, "crest_height": p.crest_height,
                "max_hs": d.stagnation.max_hs, "min_hs": d.stagnation.min_hs,
                "flow_force_spread": d.flow_force_spread, "N": p.N,
                "elevation": d.flags.elevation, "monotone": d.flags.monotone,
                "froude_bound": d.froude_bound.flag,
            })
        return rows


# ---------------------------------------------------------------- blowup proxy

def _gradient(phi, grid):
    return np.gradient(phi, grid.r, grid.s, edge_order=2)


def holder_seminorm(values: np.ndarray, grid, alpha: float) -> float:
    """Max of |f(x + d) - f(x)| / |d|^alpha over dyadic index offsets along r and s."""
    best = 0.0
    for axis, coords in ((0, grid.r), (1, grid.s)):
        n = values.shape[axis]
        k = 1
        while k < n:
            if axis == 0:
                diff = np.abs(values[k:] - values[:-k])
                dist = (coords[k:] - coords[:-k])[:, None]
            else:
                diff = np.abs(values[:, k:] - values[:, :-k])
                dist = (coords[k:] - coords[:-k])[None, :]
            best = max(best, float(np.max(diff / dist ** alpha)))
            k *= 2
    return best


def c1alpha_norm(fld: HeightField, alpha: float) -> float:
    gr, gs = _gradient(fld.phi, fld.grid)
    sup = float(np.max(np.abs(fld.phi)))
    grad = float(max(np.max(np.abs(gr)), np.max(np.abs(gs))))
    semi = max(holder_seminorm(gr, fld.grid, alpha), holder_seminorm(gs, fld.grid, alpha))
    return sup + grad + semi


def w2p_local_norm(fld: HeightField, alpha: float, window: float = CENTRAL_WINDOW) -> float:
    """Discrete W^{2,p} norm on |r| <= window, p = 2 / (1 - alpha), both halves."""
    p = 2.0 / (1.0 - alpha)
    grid = fld.grid
    gr, gs = _gradient(fld.phi, grid)
    grr, grs = _gradient(gr, grid)
    _, gss = _gradient(gs, grid)
    st = stencil(fld)
    area = np.outer(st.width, st.height)
    inside = grid.r <= window
    total = 0.0
    for f in (fld.phi, gr, gs, grr, grs, gss):
        total += float(np.sum(area[inside] * np.abs(f[inside]) ** p))
    return (2.0 * total) ** (1.0 / p)


def blowup_quantity(fld: HeightField, froude: float, alpha: float = 0.5) -> float:
    """Discrete proxy of N = |phi|_{C^{1,a}} + |phi|_{W^{2,p}_loc} + 1/inf h_s + F + 1/(F - F_cr)."""
    margin = froude - fld.profile.froude_cr
    inv_gap = np.inf if margin <= 0 else 1.0 / margin
    return (c1alpha_norm(fld, alpha) + w2p_local_norm(fld, alpha)
            + 1.0 / float(np.min(cell_slopes(fld))) + froude + inv_gap)


# ---------------------------------------------------------------- bordered algebra

def _weights(fld: HeightField) -> np.ndarray:
    st = stencil(fld)
    return np.append(np.outer(st.width, st.height).ravel(), 1.0)


def _state(fld: HeightField, froude: float) -> np.ndarray:
    return np.append(fld.phi.ravel(), froude)


def _bordered(fld, froude, border, corner, opts):
    J = jacobian(fld, froude, opts.solver.stagnation_floor)
    col = sp.csc_matrix(froude_derivative(fld, froude)[:, None])
    row = sp.csc_matrix(border[None, :])
    return sp.bmat([[J, col], [row, sp.csc_matrix([[corner]])]], format="csc")


def tangent(point: BranchPoint, previous: np.ndarray | None,
            opts: ContinuationOptions | None = None) -> np.ndarray:
    """Unit tangent (weighted norm) oriented along ``previous``; (0, 1) if none."""
    opts = opts or ContinuationOptions()
    fld = point.field
    W = _weights(fld)
    n = W.size
    if previous is None:
        previous = np.zeros(n)
        previous[-1] = 1.0
    if previous.size != n:
        raise TangentError("previous tangent does not match the grid")
    border = previous[:-1] * W[:-1]
    try:
        A = _bordered(fld, point.froude, border, previous[-1] * W[-1], opts)
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        z = splu(A).solve(rhs)
    except (RuntimeError, ValueError) as exc:
        raise TangentError(f"singular bordered system: {exc}") from exc
    if not np.all(np.isfinite(z)):
        raise TangentError("bordered solve produced non-finite values")
    z = z / np.sqrt(np.sum(W * z * z))
    if np.sum(W * z * previous) < 0:
        z = -z
    return z


def _correct(fld, froude, x0, tau, ds, opts):
    """Newton on height rows plus the arclength row; returns (field, F, iterations)."""
    W = _weights(fld)
    shape = fld.grid.shape
    x = x0 + ds * tau
    floor = opts.solver.stagnation_floor
    tol = opts.corrector_tol
    for it in range(opts.corrector_iter + 1):
        phi = x[:-1].reshape(shape).copy()
        phi[:, 0] = 0.0
        trial = fld.with_phi(phi)
        F = float(x[-1])
        if not F > 0:
            raise ConvergenceError("Froude number left the positive axis", [])
        res = residual(trial, F, floor)
        arc = float(np.sum(W * tau * (x - x0)) - ds)
        if res.norm <= tol and abs(arc) <= tol:
            return trial, F, it
        if it == opts.corrector_iter:
            break
        A = _bordered(trial, F, tau[:-1] * W[:-1], tau[-1] * W[-1], opts)
        tol = max(opts.corrector_tol, roundoff_floor(A, trial))
        delta = splu(A).solve(-np.append(res.vector, arc))
        x = x + delta
    raise ConvergenceError(f"corrector stalled at residual {res.norm:.3e}", [])


def _make_point(fld, F, t, alpha) -> BranchPoint:
    return BranchPoint(field=fld, froude=float(F), t=float(t), diagnostics=diagnose(fld, F),
                       N=blowup_quantity(fld, F, alpha))


def step(point: BranchPoint, tau: np.ndarray, ds: float,
         opts: ContinuationOptions | None = None) -> tuple[BranchPoint, int, float]:
    """Predictor-corrector step; ds halves on failure.  Returns (point, iterations, ds used)."""
    opts = opts or ContinuationOptions()
    if ds == 0:
        return point, 0, 0.0
    x0 = _state(point.field, point.froude)
    while True:
        try:
            fld, F, its = _correct(point.field, point.froude, x0, tau, ds, opts)
            return _make_point(fld, F, point.t + ds, opts.alpha), its, ds
        except (ConvergenceError, StagnationError, RuntimeError) as exc:
            if abs(ds) / 2 < opts.ds_min:
                raise StepError(f"corrector failed at ds = {ds:.3g}: {exc}") from exc
            ds = ds / 2


def _max_surface_hs(fld: HeightField) -> float:
    return float(np.max(cell_slopes(fld)))


def seed_point(profile: LaminarProfile, eps: float,
               opts: ContinuationOptions | None = None) -> BranchPoint:
    """Converged small-amplitude wave at 1/F^2 = mu_cr - eps."""
    opts = opts or ContinuationOptions()
    F = froude_from_epsilon(profile, eps)
    L = opts.length or kdv_scaling(profile).min_length(eps) * opts.length_factor
    grid = make_grid(profile, L, opts.n_r, opts.grading)
    guess = initial_guess(profile, eps, grid)
    result = newton_solve(guess, F, opts.solver)
    return _make_point(result.field, F, 0.0, opts.alpha)


def _widen(point: BranchPoint, opts: ContinuationOptions) -> BranchPoint:
    fld = point.field
    for _ in range(6):
        if decay_check(fld) <= TAIL_LIMIT:
            break
        fld = extend_domain(fld, 1.5 * fld.grid.L, point.froude, opts.solver)
    if fld is point.field:
        return point
    return _make_point(fld, point.froude, point.t, opts.alpha)


def run_branch(profile: LaminarProfile, eps: float,
               opts: ContinuationOptions | None = None) -> Branch:
    opts = opts or ContinuationOptions()
    try:
        seed = seed_point(profile, eps, opts)
    except (ConvergenceError, StagnationError, ParameterError, DomainError) as exc:
        return Branch(points=(), reason=DIVERGENCE, message=f"seed: {exc}")
    points = [seed]
    tau = None
    ds = opts.ds
    while True:
        current = points[-1]
        if 1.0 / _max_surface_hs(current.field) <= opts.tau:
            return Branch(points=tuple(points), reason=STAGNATION)
        if len(points) > opts.max_steps:
            return Branch(points=tuple(points), reason=BUDGET)
        try:
            tau = tangent(current, tau, opts)
            nxt, its, used = step(current, tau, ds, opts)
        except StepError as exc:
            return Branch(points=tuple(points), reason=STEP_FLOOR, message=str(exc))
        except (TangentError, ConvergenceError, StagnationError) as exc:
            return Branch(points=tuple(points), reason=DIVERGENCE, message=str(exc))
        widened = _widen(nxt, opts)
        if widened is not nxt:
            # the grid changed: restart the tangent from the F direction
            tau = None
        points.append(widened)
        if its <= 3:
            ds = min(1.5 * used, opts.ds_max)
        elif its >= 6:
            ds = max(0.7 * used, opts.ds_min)
        else:
            ds = used
