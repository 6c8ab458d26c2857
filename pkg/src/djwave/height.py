"""Finite-volume discretization of the height equation and its Newton solver.

Unknown: the deflection phi(r, s) = h - H at the nodes of a tensor grid on the
half-strip [0, L] x [-1, 0].  With q = H_s + phi_s and p = phi_r the fluxes are

    G1 = p / q                                  (faces r = const)
    G2 = -(1 + p^2) / (2 q^2) + 1 / (2 H_s^2)   (faces s = const)

and the equation is (G1)_r + (G2)_s = 0.  At the surface the Bernoulli
condition gives G2 = mu phi (mu = 1/F^2) directly, so the top row balances a
half control volume against that boundary flux.  The face r = 0 carries
G1 = 0 by evenness; phi = 0 on the bed and on r = L.

Rows are scaled so that interior rows approximate the PDE pointwise and top
rows approximate the Bernoulli condition.  Vertical fluxes use the cell value
of H_s, which makes every member of the laminar family an exact discrete
solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import PchipInterpolator
from scipy.sparse.linalg import splu

from .background import LaminarProfile
from .errors import ConvergenceError, StagnationError


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor grid: r-nodes graded toward the crest, s-nodes from the profile."""

    r: np.ndarray
    s: np.ndarray
    L: float
    grading: float = 0.0

    def __post_init__(self):
        if len(self.r) < 9 or len(self.s) < 9:
            raise ValueError("need at least 8 cells in each direction")
        if not self.L > 0 or np.any(np.diff(self.r) <= 0) or np.any(np.diff(self.s) <= 0):
            raise ValueError("grid nodes must be strictly increasing with L > 0")

    @property
    def n_r(self) -> int:
        return len(self.r) - 1

    @property
    def n_s(self) -> int:
        return len(self.s) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.r), len(self.s)


def graded_nodes(L: float, n_r: int, grading: float = 0.0) -> np.ndarray:
    """r = L sinh(g xi) / sinh(g) on uniform xi; g = 0 gives a uniform grid."""
    xi = np.linspace(0.0, 1.0, n_r + 1)
    if grading == 0:
        r = L * xi
    else:
        r = L * np.sinh(grading * xi) / np.sinh(grading)
    r[0], r[-1] = 0.0, L
    return r


def make_grid(profile: LaminarProfile, L: float, n_r: int, grading: float = 0.0) -> Grid:
    return Grid(r=graded_nodes(L, n_r, grading), s=profile.s, L=float(L),
                grading=float(grading))


@dataclass(frozen=True, eq=False)
class HeightField:
    """Node values phi[i, j] at (r_i, s_j); h = H + phi."""

    phi: np.ndarray
    grid: Grid
    profile: LaminarProfile

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.shape != self.grid.shape:
            raise ValueError(f"phi has shape {phi.shape}, grid needs {self.grid.shape}")
        if np.any(phi[:, 0] != 0.0):
            raise ValueError("phi must vanish on the bed")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def h(self) -> np.ndarray:
        return self.profile.H[None, :] + self.phi

    @property
    def amplitude(self) -> float:
        return float(np.max(np.abs(self.phi)))

    def with_phi(self, phi) -> "HeightField":
        return HeightField(phi=phi, grid=self.grid, profile=self.profile)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iter: int = 30
    damping: bool = True
    stagnation_floor: float = 1e-6
    max_halvings: int = 30

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


class _Stencil:
    """Geometric weights of the finite-volume scheme for one grid."""

    def __init__(self, grid: Grid, profile: LaminarProfile):
        r, ds = grid.r, np.diff(grid.s)
        M, N = grid.n_r, grid.n_s
        self.M, self.N = M, N
        self.dr = np.diff(r)
        self.ds = ds
        self.width = np.empty(M + 1)
        self.width[0] = 0.5 * self.dr[0]
        self.width[1:M] = 0.5 * (self.dr[:-1] + self.dr[1:])
        self.width[M] = 0.5 * self.dr[-1]
        self.height = np.empty(N + 1)
        self.height[0] = 0.5 * ds[0]
        self.height[1:N] = 0.5 * (ds[:-1] + ds[1:])
        self.height[N] = 0.5 * ds[-1]
        # three-point r-derivative weights; zero at the symmetry face
        self.rw = np.zeros((M + 1, 3))
        hm, hp = self.dr[:-1], self.dr[1:]
        self.rw[1:M, 0] = -hp / (hm * (hm + hp))
        self.rw[1:M, 1] = (hp - hm) / (hm * hp)
        self.rw[1:M, 2] = hm / (hp * (hm + hp))
        self.rw[M, 0], self.rw[M, 1] = -1.0 / self.dr[-1], 1.0 / self.dr[-1]
        # node phi_s from neighbouring cell differences: weights on rows j-1, j, j+1
        self.sw = np.zeros((N + 1, 3))
        lo, hi = ds[:-1], ds[1:]
        alpha, beta = hi / (lo + hi), lo / (lo + hi)
        self.sw[1:N, 0] = -alpha / lo
        self.sw[1:N, 1] = alpha / lo - beta / hi
        self.sw[1:N, 2] = beta / hi
        self.sw[N, 0], self.sw[N, 1] = -1.0 / ds[-1], 1.0 / ds[-1]
        self.sw[0, 1], self.sw[0, 2] = -1.0 / ds[0], 1.0 / ds[0]
        self.Hc = profile.Hs_cell
        self.Hs = profile.Hs
        self.lam = profile.lam
        self.row_scale = np.ones((M + 1, N + 1))
        self.row_scale[:M, 1:N] = 1.0 / np.outer(self.width[:M], self.height[1:N])
        self.row_scale[:M, N] = 1.0 / self.width[:M]

    def node_phi_r(self, phi):
        out = np.zeros_like(phi)
        w = self.rw
        out[1:-1] = w[1:-1, 0, None] * phi[:-2] + w[1:-1, 1, None] * phi[1:-1] \
            + w[1:-1, 2, None] * phi[2:]
        out[-1] = w[-1, 0] * phi[-2] + w[-1, 1] * phi[-1]
        return out

    def node_phi_s(self, phi):
        out = np.empty_like(phi)
        w = self.sw
        out[:, 1:-1] = w[None, 1:-1, 0] * phi[:, :-2] + w[None, 1:-1, 1] * phi[:, 1:-1] \
            + w[None, 1:-1, 2] * phi[:, 2:]
        out[:, -1] = w[-1, 0] * phi[:, -2] + w[-1, 1] * phi[:, -1]
        out[:, 0] = w[0, 1] * phi[:, 0] + w[0, 2] * phi[:, 1]
        return out


def stencil(field: HeightField) -> _Stencil:
    cache = field.grid.__dict__.setdefault("_stencils", {})
    key = id(field.profile)
    if key not in cache:
        cache[key] = (_Stencil(field.grid, field.profile), field.profile)
    return cache[key][0]


@dataclass(frozen=True, eq=False)
class Residual:
    rows: np.ndarray      # scaled residual, shape of the grid
    balance: np.ndarray   # unscaled control-volume flux balance
    G1: np.ndarray        # (n_r, n_s + 1) at faces r_{i+1/2}
    G2: np.ndarray        # (n_r, n_s) at faces s_{j+1/2}
    interior: np.ndarray = field(repr=False)
    top: np.ndarray = field(repr=False)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.rows)))

    @property
    def vector(self) -> np.ndarray:
        return self.rows.ravel()


def _cell_q(st: _Stencil, phi, floor: float):
    q = st.Hc[None, :] + np.diff(phi, axis=1) / st.ds[None, :]
    bad = np.argwhere(q <= floor)
    if bad.size:
        i, j = bad[0]
        raise StagnationError(
            f"H_s + phi_s = {q[i, j]:.3g} <= {floor:g} on cell (r-node {i}, s-cell {j})",
            node=(int(i), int(j)))
    return q


def _fluxes(st: _Stencil, phi, floor):
    M = st.M
    q_v = _cell_q(st, phi, floor)[:M]
    pr = st.node_phi_r(phi)
    p_v = 0.5 * (pr[:M, :-1] + pr[:M, 1:])
    hs = st.Hs[None, :] + st.node_phi_s(phi)
    if np.any(hs <= floor):
        i, j = np.argwhere(hs <= floor)[0]
        raise StagnationError(f"node estimate of h_s <= {floor:g} at node ({i}, {j})",
                              node=(int(i), int(j)))
    q_h = 0.5 * (hs[:-1] + hs[1:])
    p_h = np.diff(phi, axis=0) / st.dr[:, None]
    return p_v, q_v, p_h, q_h


def _top_flux(st: _Stencil, phi, mu: float, floor: float):
    """G1 on the faces of the top half control volumes, and its partial derivatives.

    Trapezoid over [s_{N-1/2}, s_N]: at the surface h_s comes from the
    Bernoulli condition, h_s^2 = (1 + p^2) / (lam - 2 mu phi), at the cell
    centre from the top-cell difference.
    """
    N = st.N
    p_f = np.diff(phi[:, N]) / st.dr
    bar = 0.5 * (phi[:-1, N] + phi[1:, N])
    head = st.lam - 2.0 * mu * bar
    if np.any(head <= floor):
        i = int(np.argmax(head <= floor))
        raise StagnationError(f"surface head {head[i]:.3g} <= {floor:g} near column {i}",
                              node=(i, N))
    root, norm = np.sqrt(head), np.sqrt(1.0 + p_f ** 2)
    g_surf = p_f * root / norm
    p_m = 0.5 * (p_f + np.diff(phi[:, N - 1]) / st.dr)
    q_cell = st.Hc[N - 1] + (phi[:, N] - phi[:, N - 1]) / st.ds[N - 1]
    q_m = 0.5 * (q_cell[:-1] + q_cell[1:])
    g_mid = p_m / q_m
    parts = {
        "surf_p": root / norm ** 3,
        "surf_bar": -mu * p_f / (root * norm),
        "surf_mu": -bar * p_f / (root * norm),
        "mid_p": 1.0 / q_m,
        "mid_q": -p_m / q_m ** 2,
    }
    return 0.5 * (g_surf + g_mid), parts


def residual(field: HeightField, froude: float, floor: float = 1e-6) -> Residual:
    st = stencil(field)
    phi = field.phi
    M, N = st.M, st.N
    mu = froude ** -2
    p_v, q_v, p_h, q_h = _fluxes(st, phi, floor)
    G2 = -(1.0 + p_v ** 2) / (2.0 * q_v ** 2) + 0.5 / st.Hc[None, :] ** 2
    G1 = p_h / q_h
    G1[:, N] = _top_flux(st, phi, mu, floor)[0]
    G1_left = np.vstack([np.zeros((1, N + 1)), G1[:-1]])
    bal = np.zeros((M + 1, N + 1))
    w = st.width[:M, None]
    bal[:M, 1:N] = (G1[:, 1:N] - G1_left[:, 1:N]) * st.height[None, 1:N] \
        + (G2[:, 1:] - G2[:, :-1]) * w
    bal[:M, N] = (G1[:, N] - G1_left[:, N]) * st.height[N] \
        + (mu * phi[:M, N] - G2[:, N - 1]) * st.width[:M]
    rows = bal * st.row_scale
    rows[:, 0] = phi[:, 0]
    rows[M, :] = phi[M, :]
    interior = np.zeros((M + 1, N + 1), dtype=bool)
    interior[:M, 1:N] = True
    top = np.zeros_like(interior)
    top[:M, N] = True
    return Residual(rows=rows, balance=bal, G1=G1, G2=G2, interior=interior, top=top)


def froude_derivative(field: HeightField, froude: float, floor: float = 1e-6) -> np.ndarray:
    """d(residual rows)/dF as a flat vector."""
    st = stencil(field)
    dmu = -2.0 * froude ** -3
    _, parts = _top_flux(st, field.phi, froude ** -2, floor)
    flux = 0.5 * parts["surf_mu"] * dmu
    out = np.zeros(field.grid.shape)
    top = out[:-1, -1]
    top += dmu * field.phi[:-1, -1] * st.width[:-1]
    top += flux * st.height[-1]
    top[1:] -= flux[:-1] * st.height[-1]
    out[:-1, -1] = top * st.row_scale[:-1, -1]
    return out.ravel()


def jacobian(field: HeightField, froude: float, floor: float = 1e-6) -> sp.csc_matrix:
    """Exact derivative of the scaled residual rows, as a sparse matrix."""
    st = stencil(field)
    phi = field.phi
    M, N = st.M, st.N
    n_cols = N + 1
    mu = froude ** -2
    p_v, q_v, p_h, q_h = _fluxes(st, phi, floor)

    rows_out, cols_out, vals_out = [], [], []

    def emit(ti, tj, weight, mask, deps):
        for di, dj, coef in deps:
            v = weight * coef
            keep = mask & (v != 0)
            rows_out.append((ti * n_cols + tj)[keep])
            cols_out.append((di * n_cols + dj)[keep])
            vals_out.append(v[keep])

    # vertical faces (i, j + 1/2)
    I, J = np.meshgrid(np.arange(M), np.arange(N), indexing="ij")
    g_p = -p_v / q_v ** 2
    g_q = (1.0 + p_v ** 2) / q_v ** 3
    deps = []
    for k in range(3):
        col = np.clip(I + k - 1, 0, M)
        c = 0.5 * st.rw[I, k] * g_p
        deps += [(col, J, c), (col, J + 1, c)]
    dsJ = st.ds[J]
    deps += [(I, J + 1, g_q / dsJ), (I, J, -g_q / dsJ)]
    w = st.width[I]
    emit(I, J, w, J >= 1, deps)
    emit(I, J + 1, -w, np.ones_like(J, dtype=bool), deps)

    # horizontal faces (i + 1/2, j), j = 1..N-1
    I, J = np.meshgrid(np.arange(M), np.arange(1, N), indexing="ij")
    ph, qh = p_h[:, 1:N], q_h[:, 1:N]
    f_p = 1.0 / qh
    f_q = -ph / qh ** 2
    drI = st.dr[I]
    deps = [(I + 1, J, f_p / drI), (I, J, -f_p / drI)]
    for col in (I, I + 1):
        for k in range(3):
            deps.append((col, np.clip(J + k - 1, 0, N), 0.5 * f_q * st.sw[J, k]))
    v = st.height[J]
    emit(I, J, v, np.ones_like(J, dtype=bool), deps)
    emit(I + 1, J, -v, I + 1 <= M - 1, deps)

    # horizontal faces of the top half volumes
    _, parts = _top_flux(st, phi, mu, floor)
    I = np.arange(M)
    J = np.full(M, N)
    drI = st.dr[I]
    a_p = 0.5 * parts["surf_p"] / drI
    m_p = 0.25 * parts["mid_p"] / drI
    m_q = 0.25 * parts["mid_q"] / st.ds[N - 1]
    deps = [
        (I + 1, J, a_p + 0.25 * parts["surf_bar"] + m_p + m_q),
        (I, J, -a_p + 0.25 * parts["surf_bar"] - m_p + m_q),
        (I + 1, J - 1, m_p - m_q),
        (I, J - 1, -m_p - m_q),
    ]
    v = np.full(M, st.height[N])
    emit(I, J, v, np.ones(M, dtype=bool), deps)
    emit(I + 1, J, -v, I + 1 <= M - 1, deps)

    # Bernoulli term on the top row
    top_i = np.arange(M)
    rows_out.append(top_i * n_cols + N)
    cols_out.append(top_i * n_cols + N)
    vals_out.append(mu * st.width[:M])

    r = np.concatenate(rows_out)
    c = np.concatenate(cols_out)
    vals = np.concatenate(vals_out) * st.row_scale.ravel()[r]
    # Dirichlet rows: bed and far field
    dirichlet = np.unique(np.concatenate([np.arange(M + 1) * n_cols, M * n_cols + np.arange(n_cols)]))
    r = np.concatenate([r, dirichlet])
    c = np.concatenate([c, dirichlet])
    vals = np.concatenate([vals, np.ones(dirichlet.size)])
    size = (M + 1) * n_cols
    return sp.csc_matrix((vals, (r, c)), shape=(size, size))


def roundoff_floor(J: sp.spmatrix, field: HeightField) -> float:
    """Residual level set by rounding: 8 eps |J|_inf max(1, |phi|_inf)."""
    row_sums = np.asarray(abs(J).sum(axis=1)).ravel()
    return float(8.0 * np.finfo(float).eps * row_sums.max() * max(1.0, field.amplitude))


@dataclass(frozen=True, eq=False)
class NewtonResult:
    field: HeightField
    froude: float
    iterations: int
    history: tuple

    @property
    def residual_norm(self) -> float:
        return self.history[-1]


def newton_solve(guess: HeightField, froude: float,
                 opts: SolverOptions | None = None) -> NewtonResult:
    """Damped Newton iteration on the scaled residual (max-norm backtracking)."""
    opts = opts or SolverOptions()
    fld = guess
    res = residual(fld, froude, opts.stagnation_floor)
    history = [res.norm]
    iterations = 0
    while history[-1] > opts.tol:
        if iterations >= opts.max_iter:
            raise ConvergenceError(
                f"no convergence in {opts.max_iter} iterations (residual {history[-1]:.3e})",
                history)
        J = jacobian(fld, froude, opts.stagnation_floor)
        floor = roundoff_floor(J, fld)
        delta = splu(J).solve(-res.vector).reshape(fld.grid.shape)
        delta[:, 0] = 0.0
        delta[-1] = 0.0
        step = 1.0
        for _ in range(opts.max_halvings + 1):
            try:
                trial = fld.with_phi(fld.phi + step * delta)
                trial_res = residual(trial, froude, opts.stagnation_floor)
                if trial_res.norm < history[-1] or not opts.damping:
                    break
            except StagnationError:
                if not opts.damping:
                    raise
            step *= 0.5
        else:
            if history[-1] <= floor:
                break
            raise ConvergenceError(
                f"line search exhausted at residual {history[-1]:.3e}", history)
        fld, res = trial, trial_res
        history.append(res.norm)
        iterations += 1
    return NewtonResult(field=fld, froude=float(froude), iterations=iterations,
                        history=tuple(history))


def decay_check(field: HeightField) -> float:
    """max |phi| over the outer 10% of columns divided by max |phi|."""
    peak = np.max(np.abs(field.phi))
    if peak == 0:
        return 0.0
    outer = field.grid.r >= 0.9 * field.grid.L
    return float(np.max(np.abs(field.phi[outer])) / peak)


def resample(field: HeightField, grid: Grid) -> HeightField:
    """Monotone interpolation of phi onto another r-grid (zero beyond the old L)."""
    interp = PchipInterpolator(field.grid.r, field.phi, axis=0, extrapolate=False)
    phi = np.nan_to_num(interp(np.minimum(grid.r, field.grid.L)))
    phi[grid.r > field.grid.L] = 0.0
    phi[-1] = 0.0
    phi[:, 0] = 0.0
    return HeightField(phi=phi, grid=grid, profile=field.profile)


def extend_domain(field: HeightField, new_L: float, froude: float | None = None,
                  opts: SolverOptions | None = None) -> HeightField:
    """Zero-pad onto a longer strip with the same grading; re-solve if F is given."""
    old = field.grid
    n_r = int(np.ceil(old.n_r * new_L / old.L))
    grid = make_grid(field.profile, new_L, n_r, old.grading)
    padded = resample(field, grid)
    if froude is None:
        return padded
    return newton_solve(padded, froude, opts).field
