import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from djwave.background import build_profile
from djwave.continuation import (BUDGET, DIVERGENCE, ContinuationOptions, _weights,
                                 blowup_quantity, c1alpha_norm, holder_seminorm,
                                 run_branch, seed_point, step, tangent, w2p_local_norm)
from djwave.height import HeightField, make_grid
from djwave.presets import preset

FAST = dict(n_r=80, grading=4.0, ds=0.02, ds_max=0.05)


@pytest.fixture(scope="module")
def coarse():
    return build_profile(preset("two-layer"), 32)


@pytest.fixture(scope="module")
def short_branch(coarse):
    return run_branch(coarse, 0.01, ContinuationOptions(max_steps=2, **FAST))


class Grid1:
    def __init__(self, r, s):
        self.r, self.s = r, s


def all_pairs_seminorm(values, grid, alpha):
    best = 0.0
    for axis, x in ((0, grid.r), (1, grid.s)):
        v = np.moveaxis(values, axis, 0)
        for i in range(len(x)):
            for j in range(i + 1, len(x)):
                best = max(best, np.max(np.abs(v[j] - v[i])) / (x[j] - x[i]) ** alpha)
    return best


@given(arrays(float, (6, 5), elements=st.floats(-1, 1)), st.floats(0.05, 0.5))
def test_dyadic_seminorm_bounded_by_all_pairs(values, alpha):
    grid = Grid1(np.array([0, 0.1, 0.3, 0.6, 1.0, 1.5]), np.linspace(-1, 0, 5))
    dyadic = holder_seminorm(values, grid, alpha)
    assert dyadic <= all_pairs_seminorm(values, grid, alpha) + 1e-15


def test_seminorm_of_linear_function():
    r = np.linspace(0.0, 1.0, 9)
    grid = Grid1(r, np.linspace(-1, 0, 3))
    values = np.outer(r, np.ones(3))
    # largest dyadic offset is 8 steps = the whole interval
    assert holder_seminorm(values, grid, 0.5) == pytest.approx(1.0)


def test_norm_proxies(coarse):
    grid = make_grid(coarse, 20.0, 40, 2.0)
    zero = HeightField(phi=np.zeros(grid.shape), grid=grid, profile=coarse)
    assert c1alpha_norm(zero, 0.5) == 0.0 and w2p_local_norm(zero, 0.5) == 0.0
    R, S = np.meshgrid(grid.r, coarse.s, indexing="ij")
    phi = 0.01 * np.exp(-R ** 2 / 20) * (S + 1)
    phi[-1] = 0
    one = zero.with_phi(phi)
    two = zero.with_phi(2 * phi)
    assert w2p_local_norm(two, 0.5) == pytest.approx(2 * w2p_local_norm(one, 0.5))
    assert c1alpha_norm(two, 0.5) == pytest.approx(2 * c1alpha_norm(one, 0.5))
    F = coarse.froude_cr + 0.1
    expected = 1.0 / coarse.Hs_cell.min() + F + 10.0
    assert blowup_quantity(zero, F) == pytest.approx(expected)
    assert blowup_quantity(zero, coarse.froude_cr) == np.inf


def test_options_validation():
    with pytest.raises(ValueError):
        ContinuationOptions(tau=1.5)
    with pytest.raises(ValueError):
        ContinuationOptions(alpha=0.7)
    with pytest.raises(ValueError):
        ContinuationOptions(ds=1.0, ds_max=0.5)


def test_tangent_is_unit_and_oriented(coarse):
    opts = ContinuationOptions(**FAST)
    seed = seed_point(coarse, 0.01, opts)
    t = tangent(seed, None, opts)
    W = _weights(seed.field)
    assert np.sum(W * t * t) == pytest.approx(1.0)
    assert t[-1] > 0
    flipped = tangent(seed, -t, opts)
    assert np.allclose(flipped, -t)


def test_zero_step_is_identity(coarse):
    opts = ContinuationOptions(**FAST)
    seed = seed_point(coarse, 0.01, opts)
    same, its, used = step(seed, tangent(seed, None, opts), 0.0, opts)
    assert same is seed and its == 0 and used == 0.0


def test_short_branch_grows(short_branch):
    assert short_branch.reason == BUDGET
    assert len(short_branch) == 3
    F = [p.froude for p in short_branch.points]
    crest = [p.crest_height for p in short_branch.points]
    assert np.all(np.diff(F) > 0) and np.all(np.diff(crest) > 0)
    ts = [p.t for p in short_branch.points]
    assert ts[0] == 0 and np.all(np.diff(ts) > 0)
    for p in short_branch.points:
        assert p.froude > p.field.profile.froude_cr


def test_branch_is_deterministic(coarse, short_branch):
    again = run_branch(coarse, 0.01, ContinuationOptions(max_steps=2, **FAST))
    assert again.table() == short_branch.table()


def test_large_seed_diverges(coarse):
    branch = run_branch(coarse, 0.4, ContinuationOptions(**FAST))
    assert branch.reason == DIVERGENCE and len(branch) == 0
    assert "seed" in branch.message
