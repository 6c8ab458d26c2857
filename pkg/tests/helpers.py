from djwave.height import make_grid, newton_solve
from djwave.kdv import froude_from_epsilon, initial_guess, kdv_scaling


def small_wave(profile, eps, n_r=100, grading=4.0):
    """Converged wave at 1/F^2 = mu_cr - eps on a strip of 1.05 decay lengths."""
    L = kdv_scaling(profile).min_length(eps) * 1.05
    grid = make_grid(profile, L, n_r, grading)
    F = froude_from_epsilon(profile, eps)
    return newton_solve(initial_guess(profile, eps, grid), F).field, F
