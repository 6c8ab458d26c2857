import numpy as np
import pytest

from helpers import small_wave

from djwave.diagnostics import laminar_field
from djwave.errors import InversionError
from djwave.eulerian import (INTERPOLATION_TOL, bound_checks, kink_location, node_slopes,
                             roundtrip, stream_from_velocity, to_eulerian)
from djwave.height import make_grid


@pytest.fixture(scope="module")
def waves(irrotational, two_layer):
    return {"irrotational": small_wave(irrotational, 0.02),
            "two-layer": small_wave(two_layer, 0.02)}


def test_uniform_stream_is_hydrostatic(irrotational):
    grid = make_grid(irrotational, 10.0, 20)
    fld = laminar_field(irrotational, irrotational.lam, grid)
    F, P_atm = 1.2, 0.7
    e = to_eulerian(fld, F, P_atm)
    assert np.allclose(e.u_rel, -1.0, atol=1e-14)
    assert np.allclose(e.v, 0.0, atol=1e-14)
    assert np.allclose(e.P, P_atm - e.y / F ** 2, atol=1e-14)
    assert e.Q == pytest.approx(1.0 + 2.0 / F ** 2)


def test_surface_pressure_is_atmospheric(waves):
    for fld, F in waves.values():
        e = to_eulerian(fld, F, P_atm=0.3)
        assert np.allclose(e.P[:, -1], 0.3, atol=1e-13)
        assert np.allclose(e.E, e.Q / 2 + 0.3, atol=1e-12)


def test_bernoulli_surface_slope_close_to_node_estimate(waves):
    for fld, F in waves.values():
        h_r, h_s = node_slopes(fld, F)
        top_cell = fld.profile.Hs_cell[-1] + (fld.phi[:, -1] - fld.phi[:, -2]) / fld.profile.ds[-1]
        assert np.max(np.abs(h_s[:, -1] - top_cell)) < 2e-2 * np.max(top_cell)


def test_stream_function_from_velocity(waves):
    for fld, F in waves.values():
        e = to_eulerian(fld, F)
        psi = stream_from_velocity(e)
        assert np.max(np.abs(psi - e.psi)) < 1e-4
        assert np.allclose(e.psi[:, 0], 1.0) and np.allclose(e.psi[:, -1], 0.0)


def test_roundtrip(waves):
    for fld, F in waves.values():
        rt = roundtrip(to_eulerian(fld, F))
        assert rt.error < 10 * INTERPOLATION_TOL
        assert np.allclose(rt.field.phi, fld.phi, atol=1e-12)


def test_roundtrip_rejects_folded_column(waves):
    fld, F = waves["irrotational"]
    e = to_eulerian(fld, F)
    y = e.y.copy()
    y[0, 5], y[0, 6] = y[0, 6], y[0, 5]
    bad = type(e)(x=e.x, y=y, u_rel=e.u_rel, v=e.v, psi=e.psi, P=e.P, Q=e.Q,
                  P_atm=e.P_atm, froude=e.froude, source=e.source)
    with pytest.raises(InversionError):
        roundtrip(bad)


def test_mirror_symmetry(waves):
    fld, F = waves["two-layer"]
    m = to_eulerian(fld, F).mirrored()
    n = fld.grid.shape[0]
    assert m.x.shape[0] == 2 * n - 1
    assert np.array_equal(m.y, m.y[::-1])
    assert np.array_equal(m.x, -m.x[::-1])
    assert np.array_equal(m.v, -m.v[::-1])


def test_kink_at_vorticity_jump(waves, two_layer):
    fld, F = waves["two-layer"]
    assert kink_location(to_eulerian(fld, F)) == two_layer.jumps[0]


def test_bounds_hold_on_small_waves(waves):
    for fld, F in waves.values():
        report = bound_checks(to_eulerian(fld, F), fld.profile)
        assert report.passes
        assert report.gamma_plus >= 0
