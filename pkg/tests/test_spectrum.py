import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import eigh
from scipy.optimize import brentq

from djwave.spectrum import (a_of_mu, auxiliary_phi, b_ratio, center_eigenvectors,
                             critical_mode, eigenvalues, shoot)


def tan_roots(k):
    """Positive roots of tan x = x, one per branch (k pi, k pi + pi/2)."""
    f = lambda x: np.sin(x) - x * np.cos(x)
    return np.array([brentq(f, j * np.pi + 1e-9, j * np.pi + np.pi / 2 - 1e-9, xtol=1e-15)
                     for j in range(1, k + 1)])


def fem_eigenvalues(profile, mu, k=3, refine=16):
    """P1 finite elements for -(Phi_s / H_s^3)_s = nu Phi / H_s with the Robin top row."""
    ds = np.repeat(profile.ds / refine, refine)
    hs = np.repeat(profile.Hs_cell, refine)
    n = ds.size
    K = np.zeros((n + 1, n + 1))
    M = np.zeros((n + 1, n + 1))
    for e in range(n):
        ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / (hs[e] ** 3 * ds[e])
        me = np.array([[2.0, 1.0], [1.0, 2.0]]) * ds[e] / (6.0 * hs[e])
        K[e:e + 2, e:e + 2] += ke
        M[e:e + 2, e:e + 2] += me
    K[-1, -1] -= mu
    vals = eigh(K[1:, 1:], M[1:, 1:], eigvals_only=True)
    return vals[:k]


def test_irrotational_eigenvalues_match_tan_roots(irrotational):
    report = eigenvalues(irrotational, 1.0)
    assert abs(report.eigenvalues[0]) < 1e-8
    assert np.allclose(report.eigenvalues[1:], tan_roots(2) ** 2, atol=1e-6)


def test_irrotational_poles_are_dirichlet_values(irrotational):
    report = eigenvalues(irrotational, 1.0)
    assert np.allclose(report.poles, (np.arange(1, 4) * np.pi) ** 2, rtol=1e-9)


def test_two_layer_eigenvalues_match_finite_elements(two_layer):
    mu = two_layer.mu_cr - 0.05
    shooting = eigenvalues(two_layer, mu).eigenvalues
    fem = fem_eigenvalues(two_layer, mu)
    assert shooting[0] == pytest.approx(fem[0], abs=2e-4)
    assert np.allclose(shooting[1:], fem[1:], rtol=2e-4)


def test_eigenvalues_interlace_poles(profile):
    report = eigenvalues(profile, profile.mu_cr + 0.2, k=3)
    for nu, (lo, hi) in zip(report.eigenvalues, report.brackets):
        assert lo < nu < hi
    assert np.all(np.diff(report.eigenvalues) > 0)


def test_zero_eigenvalue_at_critical_mu(profile):
    report = eigenvalues(profile, profile.mu_cr)
    assert abs(report.eigenvalues[0]) < 1e-8


@given(st.floats(-0.3, 0.3))
def test_b_ratio_at_eigenvalue_equals_mu(profile, shift):
    mu = profile.mu_cr + shift
    nu0 = eigenvalues(profile, mu, k=1).eigenvalues[0]
    assert b_ratio(profile, nu0)[0] == pytest.approx(mu, abs=1e-8 * max(1.0, abs(mu)))
    # supercritical mu < mu_cr gives a decaying mode nu0 > 0
    if abs(shift) > 1e-6:
        assert np.sign(nu0) == np.sign(-shift)


def test_a_of_mu_irrotational(irrotational):
    for mu in (0.5, 1.0, 1.7):
        assert a_of_mu(irrotational, mu) == pytest.approx(mu - 1.0, abs=1e-13)


def test_a_of_mu_changes_sign(profile):
    lo = a_of_mu(profile, profile.mu_cr - 0.1)
    hi = a_of_mu(profile, profile.mu_cr + 0.1)
    assert lo * hi < 0
    assert abs(a_of_mu(profile, profile.mu_cr)) < 1e-10


def test_shooting_solution_of_irrotational_problem(irrotational):
    nu = 4.0
    state = shoot(irrotational, nu)
    t = state.t
    assert np.allclose(state.a, np.sin(2.0 * t) / 2.0, atol=1e-9)
    assert np.allclose(state.b, np.cos(2.0 * t), atol=1e-9)


def test_center_eigenvectors(irrotational, two_layer):
    u1, u2 = center_eigenvectors(irrotational)
    assert np.allclose(u1[:, 0], irrotational.s + 1.0, atol=1e-14)
    assert np.all(u2[:, 0] == 0) and np.all(u1[:, 1] == 0)
    mode = critical_mode(two_layer)
    assert mode[0] == 0 and np.all(np.diff(mode) > 0)


def test_auxiliary_function_positive_for_supercritical(profile):
    report = auxiliary_phi(profile, 1.05 * profile.froude_cr)
    assert report.passes
    assert np.all(report.values > 0)
