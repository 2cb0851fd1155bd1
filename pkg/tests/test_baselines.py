"""Baselines: FSPL closed form and fit, RBF/TPS against dense-solve oracles."""

import numpy as np
import pytest

from roomwave.baselines import (
    ConditioningError,
    RbfConfig,
    fit_fspl_offset,
    fspl_base,
    fspl_predict,
    rbf_fit_predict,
)
from roomwave.rng import stream
from roomwave.scene import (
    ObservationSet,
    RadioMap,
    Scene,
    Transmitter,
    empty_map_for_scene,
)

FREQ = 5.92e9


def open_geometry():
    s = Scene(id="g", bounds=(0, 0, 9.6, 9.6), room_height=3.0, walls=[],
              furniture=[], transmitters=[], rng_seed=0)
    return empty_map_for_scene(s, map_id="g0")


def obs_at(geometry, rows, cols, values):
    return ObservationSet(rows, cols, values, geometry.map_id)


# ---- FSPL ----------------------------------------------------------------------

def test_fspl_reference_values():
    g = open_geometry()
    # tx exactly 1 m above a pixel center plane in x, same rx height
    tx = Transmitter([0.15 + 1.0, 0.15, 1.0])
    rm = fspl_predict(tx, g, a=0.0)
    assert rm.values[0, 0] == pytest.approx(-47.90, abs=5e-3)

    tx2 = Transmitter([0.15 + 2.0, 0.15, 1.0])
    rm2 = fspl_predict(tx2, g, a=0.0)
    assert rm2.values[0, 0] == pytest.approx(-53.92, abs=5e-3)
    assert rm.values[0, 0] - rm2.values[0, 0] == pytest.approx(
        20 * np.log10(2), abs=1e-9)


def test_fspl_offset_shifts_everywhere():
    g = open_geometry()
    tx = Transmitter([4.8, 4.8, 1.5])
    a0 = fspl_predict(tx, g, a=0.0)
    a10 = fspl_predict(tx, g, a=10.0)
    m = g.valid_mask & (a0.values > -61.0)  # away from the clamp
    assert np.allclose(a10.values[m] - a0.values[m], 10.0, atol=1e-12)


def test_fspl_clamps_at_noise_floor_and_guard():
    g = open_geometry()
    tx = Transmitter([0.15, 0.15, 1.0])  # exactly on a pixel center
    rm = fspl_predict(tx, g)
    assert np.isfinite(rm.values[g.valid_mask]).all()
    far = fspl_predict(tx, g, a=-40.0)
    assert far.values[g.valid_mask].min() == -71.0


def test_fit_offset_examples_and_grid_search_oracle():
    g = open_geometry()
    tx = Transmitter([3.3, 2.7, 1.4])
    base = fspl_base(tx, g)
    rows = np.array([2, 5, 9])
    cols = np.array([4, 20, 11])

    on_curve = obs_at(g, rows, cols, base[rows, cols])
    assert fit_fspl_offset(on_curve, tx, g) == pytest.approx(0.0, abs=1e-12)

    plus3 = obs_at(g, rows, cols, base[rows, cols] + 3.0)
    assert fit_fspl_offset(plus3, tx, g) == pytest.approx(3.0, abs=1e-12)

    mixed = obs_at(g, rows, cols, base[rows, cols] + np.array([-1.0, 0.0, 4.0]))
    assert fit_fspl_offset(mixed, tx, g) == pytest.approx(1.0, abs=1e-12)

    # grid-search MSE oracle on random observation sets
    rng = stream(17, "fit")
    grid = np.arange(-20.0, 20.0, 0.001)
    for _ in range(20):
        k = int(rng.integers(2, 12))
        r = rng.integers(0, 32, k)
        c = rng.integers(0, 32, k)
        v = base[r, c] + rng.normal(0, 3, k)
        o = obs_at(g, r, c, v)
        a_hat = fit_fspl_offset(o, tx, g)
        resid = v - base[r, c]
        mse = ((resid[None, :] - grid[:, None]) ** 2).mean(axis=1)
        a_grid = grid[np.argmin(mse)]
        assert abs(a_hat - a_grid) <= 0.001


def test_fit_offset_requires_observations():
    g = open_geometry()
    with pytest.raises(ValueError):
        fit_fspl_offset(obs_at(g, [], [], []), Transmitter([1, 1, 1]), g)


# ---- RBF -----------------------------------------------------------------------

def test_single_observation_gaussian_reproduces_value():
    g = open_geometry()
    o = obs_at(g, [7], [9], [-44.0])
    rm = rbf_fit_predict(o, RbfConfig(kernel="gaussian"), g)
    assert rm.values[7, 9] == pytest.approx(-44.0, abs=1e-8)


def test_interpolation_exact_at_nodes_both_kernels():
    g = open_geometry()
    rng = stream(3, "nodes")
    for kernel in ("gaussian", "thin_plate_spline"):
        for _ in range(6):
            k = int(rng.integers(4, 14))
            flat = rng.choice(32 * 32, size=k, replace=False)
            r, c = np.divmod(flat, 32)
            v = rng.uniform(-70, -15, k)
            o = obs_at(g, r, c, v)
            rm = rbf_fit_predict(o, RbfConfig(kernel=kernel), g)
            assert np.max(np.abs(rm.values[r, c] - v)) < 1e-6


def test_tps_reproduces_affine_field():
    g = open_geometry()
    rng = stream(4, "affine")
    centers = g.pixel_centers()
    for _ in range(5):
        a, b, c = rng.uniform(-3, 3, 3)
        field = a + b * centers[..., 0] + c * centers[..., 1] - 45.0
        flat = rng.choice(32 * 32, size=12, replace=False)
        r, co = np.divmod(flat, 32)
        o = obs_at(g, r, co, field[r, co])
        rm = rbf_fit_predict(o, RbfConfig(kernel="thin_plate_spline"), g)
        assert np.max(np.abs(rm.values[g.valid_mask] - field[g.valid_mask])) < 1e-6


def test_gaussian_matches_dense_solve_oracle():
    # independent construction + lstsq solve, <= 10-point systems
    g = open_geometry()
    rng = stream(5, "dense")
    centers = g.pixel_centers()
    for _ in range(10):
        k = int(rng.integers(2, 11))
        flat = rng.choice(32 * 32, size=k, replace=False)
        r, c = np.divmod(flat, 32)
        v = rng.uniform(-70, -15, k)
        eps = float(rng.uniform(0.5, 3.0))
        o = obs_at(g, r, c, v)
        rm = rbf_fit_predict(o, RbfConfig(kernel="gaussian", shape_epsilon=eps,
                                          regularization=0.0), g)
        pts = np.stack([centers[rr, cc] for rr, cc in zip(r, c)])
        km = np.exp(-(np.linalg.norm(pts[:, None] - pts[None, :], axis=-1) / eps) ** 2)
        w, *_ = np.linalg.lstsq(km, v, rcond=None)
        q = centers.reshape(-1, 2)
        kq = np.exp(-(np.linalg.norm(q[:, None] - pts[None, :], axis=-1) / eps) ** 2)
        want = (kq @ w).reshape(32, 32)
        assert np.max(np.abs(rm.values[g.valid_mask] - want[g.valid_mask])) < 1e-8


def test_matches_scipy_rbf_interpolator():
    from scipy.interpolate import RBFInterpolator

    g = open_geometry()
    rng = stream(6, "scipy")
    centers = g.pixel_centers()
    flat = rng.choice(32 * 32, size=9, replace=False)
    r, c = np.divmod(flat, 32)
    v = rng.uniform(-70, -15, 9)
    pts = np.stack([centers[rr, cc] for rr, cc in zip(r, c)])
    o = obs_at(g, r, c, v)

    eps = 1.7
    mine = rbf_fit_predict(o, RbfConfig(kernel="gaussian", shape_epsilon=eps,
                                        regularization=0.0), g)
    # scipy gaussian kernel is exp(-(eps*r)^2): pass the reciprocal
    ref = RBFInterpolator(pts, v, kernel="gaussian", epsilon=1.0 / eps,
                          smoothing=0.0, degree=-1)
    want = ref(centers.reshape(-1, 2)).reshape(32, 32)
    assert np.max(np.abs(mine.values[g.valid_mask] - want[g.valid_mask])) < 1e-7

    mine_tps = rbf_fit_predict(o, RbfConfig(kernel="thin_plate_spline",
                                            regularization=0.0), g)
    ref_tps = RBFInterpolator(pts, v, kernel="thin_plate_spline", smoothing=0.0,
                              degree=1)
    want_tps = ref_tps(centers.reshape(-1, 2)).reshape(32, 32)
    assert np.max(np.abs(mine_tps.values[g.valid_mask] - want_tps[g.valid_mask])) < 1e-7


def test_gaussian_permutation_invariance():
    g = open_geometry()
    rng = stream(7, "perm")
    flat = rng.choice(32 * 32, size=8, replace=False)
    r, c = np.divmod(flat, 32)
    v = rng.uniform(-70, -15, 8)
    a = rbf_fit_predict(obs_at(g, r, c, v), RbfConfig(), g)
    p = rng.permutation(8)
    b = rbf_fit_predict(obs_at(g, r[p], c[p], v[p]), RbfConfig(), g)
    assert np.allclose(a.values, b.values, atol=1e-9)


def test_rbf_error_conditions():
    g = open_geometry()
    with pytest.raises(ValueError):
        rbf_fit_predict(obs_at(g, [], [], []), RbfConfig(), g)
    with pytest.raises(ValueError):
        rbf_fit_predict(obs_at(g, [1, 2], [1, 2], [-30, -40]),
                        RbfConfig(kernel="thin_plate_spline"), g)
    # collinear points: TPS affine system is rank deficient
    with pytest.raises(ValueError):
        rbf_fit_predict(obs_at(g, [1, 2, 3, 4], [5, 5, 5, 5], [-30, -40, -35, -33]),
                        RbfConfig(kernel="thin_plate_spline"), g)
    # duplicate observation pixels without regularization: singular kernel
    dup = ObservationSet([3, 3], [4, 4], [-30.0, -50.0], g.map_id)
    with pytest.raises(ConditioningError):
        rbf_fit_predict(dup, RbfConfig(kernel="gaussian", regularization=0.0), g)
    with pytest.raises(ValueError):
        RbfConfig(kernel="cubic")
    with pytest.raises(ValueError):
        RbfConfig(shape_epsilon=-1.0)


def test_outputs_respect_geometry_mask():
    s = Scene(id="g", bounds=(1.0, 1.0, 6.0, 5.0), room_height=3.0,
              walls=[], furniture=[], transmitters=[], rng_seed=0)
    g = empty_map_for_scene(s, map_id="gm")
    assert not g.valid_mask.all()
    rows, cols = np.nonzero(g.valid_mask)
    o = ObservationSet(rows[:5], cols[:5], np.linspace(-60, -30, 5), "gm")
    for rm in (fspl_predict(Transmitter([3, 3, 1.5]), g, 0.0),
               rbf_fit_predict(o, RbfConfig(), g)):
        assert np.all(rm.values[~g.valid_mask] == 0.0)
        assert rm.map_id == "gm"
