import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from djwave.background import (BackgroundCurrent, build_profile, critical_froude,
                               kappa_of_surface_height, laminar_height, mu_of_kappa)
from djwave.errors import FamilyError, ResolutionError, StagnantBackgroundError
from djwave.presets import SHAPES, current_from_shape, preset


def shape_segments(name):
    """Breakpoints (y, u_rel) with u_rel = U* / int U*, straight from the shape table."""
    y, u = np.array(SHAPES[name]).T
    return y, u / np.trapezoid(u, y)


def streamline_label(name, yy):
    """s(y) = -1 + int_{-1}^y u_rel, exact for piecewise-linear u_rel."""
    y, u = shape_segments(name)
    inside = y < yy
    ys = np.append(y[inside], yy)
    us = np.append(u[inside], np.interp(yy, y, u))
    return -1.0 + np.trapezoid(us, ys)


def inverse_square_integral(name):
    """int u_rel^-2 dy, exact segment by segment."""
    y, u = shape_segments(name)
    total = 0.0
    for y0, y1, a, b in zip(y[:-1], y[1:], u[:-1], u[1:]):
        total += (y1 - y0) / (a * b)
    return total


def test_irrotational_closed_form(irrotational):
    p = irrotational
    assert np.allclose(p.H, p.s + 1.0, atol=1e-15)
    assert np.allclose(p.Hs_cell, 1.0, atol=1e-14)
    assert p.lam == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(p.Gamma, 0.0, atol=1e-14)
    mu, F = critical_froude(p)
    assert mu == pytest.approx(1.0, abs=1e-12) and F == pytest.approx(1.0, abs=1e-12)
    assert p.jumps == ()


def test_two_layer_heights_match_inverse_of_streamline_map(two_layer):
    for s, H in zip(two_layer.s[1:-1:5], two_layer.H[1:-1:5]):
        y = brentq(lambda yy: streamline_label("two-layer", yy) - s, -1.0, 0.0, xtol=1e-15)
        assert H == pytest.approx(y + 1.0, abs=1e-12)


def test_jump_sits_on_a_face(two_layer, three_layer):
    s_jump = streamline_label("two-layer", -0.5)
    (j,) = two_layer.jumps
    assert two_layer.s[j] == pytest.approx(s_jump, abs=1e-14)
    assert len(three_layer.jumps) == 2
    # gamma is constant between jumps and changes across them
    g = two_layer.gamma
    assert np.ptp(g[:j]) < 1e-10 and np.ptp(g[j:]) < 1e-10
    assert abs(g[j] - g[j - 1]) > 0.1


def test_critical_froude_converges_to_continuous_value():
    exact = 1.0 / inverse_square_integral("two-layer")
    errs = [abs(build_profile(preset("two-layer"), n).mu_cr - exact) for n in (32, 64, 128)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)
    assert errs[-1] < 1e-4


def test_laminar_height_irrotational(irrotational):
    for kappa in (0.5, 1.0, 2.3):
        assert np.allclose(laminar_height(irrotational, kappa),
                           (irrotational.s + 1.0) / np.sqrt(kappa), atol=1e-14)
    assert laminar_height(irrotational, 4.0, -0.5) == pytest.approx(0.25)


def test_mu_of_kappa_irrotational(irrotational):
    for kappa in (0.3, 0.9, 1.2, 3.0):
        expected = (kappa - 1.0) / (2.0 * (1.0 - kappa ** -0.5))
        assert mu_of_kappa(irrotational, kappa) == pytest.approx(expected, rel=1e-12)
    assert mu_of_kappa(irrotational, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_mu_of_kappa_matches_direct_quotient(two_layer):
    p = two_layer
    for kappa in (p.lam - 0.3, p.lam + 0.05, p.lam + 0.7):
        top = laminar_height(p, kappa)[-1]
        direct = (kappa - p.lam) / (2.0 * (1.0 - top))
        assert mu_of_kappa(p, kappa) == pytest.approx(direct, rel=1e-9)


def test_mu_continuous_through_lambda(two_layer):
    p = two_layer
    near = [mu_of_kappa(p, p.lam + d) for d in (-1e-6, -1e-7, 1e-7, 1e-6)]
    assert np.allclose(near, p.mu_cr, rtol=1e-5)


@given(st.floats(-0.5, 0.8), st.floats(1e-3, 0.5))
def test_mu_strictly_increasing(profile, offset, gap):
    k0 = profile.lam + offset
    assert mu_of_kappa(profile, k0 + gap) > mu_of_kappa(profile, k0)


@given(st.floats(0.7, 1.3))
def test_surface_height_inverse(profile, h0):
    kappa = kappa_of_surface_height(profile, h0)
    assert laminar_height(profile, kappa)[-1] == pytest.approx(h0, abs=1e-10)


def test_family_error_below_floor(two_layer):
    with pytest.raises(FamilyError):
        laminar_height(two_layer, -2.0 * two_layer.Gamma_min - 1e-3)
    with pytest.raises(FamilyError):
        kappa_of_surface_height(two_layer, -1.0)


def test_stagnant_background_rejected():
    with pytest.raises(StagnantBackgroundError):
        BackgroundCurrent(depth=1.0, gravity=9.81, speed=1.0, y=(-1.0, 0.0), u=(1.0, 0.0))


def test_resolution_error():
    with pytest.raises(ResolutionError):
        build_profile(preset("irrotational"), 8)


def test_surface_grading_refines_near_surface():
    plain = build_profile(preset("two-layer"), 64)
    graded = build_profile(preset("two-layer"), 64, surface_grading=2.0)
    # near xi = 1 the map s(xi) has slope g / sinh(g) relative to a uniform grid
    assert graded.ds[-1] / plain.ds[-1] == pytest.approx(2.0 / np.sinh(2.0), rel=0.05)
    assert graded.s[graded.jumps[0]] == pytest.approx(plain.s[plain.jumps[0]], abs=1e-14)
    assert graded.n_s == 64


def test_preset_scaling_and_units():
    c = preset("three-layer")
    assert c.flux == pytest.approx(np.sqrt(c.gravity * c.depth ** 3))
    units = c.unit_factors(1.2)
    assert units["velocity"] == pytest.approx(1.2 * c.flux / c.depth)
    with pytest.raises(ValueError):
        preset("four-layer")
    custom = current_from_shape([(-1.0, 2.0), (0.0, 1.0)])
    assert custom.u[0] == pytest.approx(2.0 * custom.u[1])


def test_profile_digest_is_stable():
    a = build_profile(preset("two-layer"), 48)
    b = build_profile(preset("two-layer"), 48)
    assert a.digest == b.digest
    assert a.digest != build_profile(preset("two-layer"), 64).digest
