"""Grids, horizontal differentiation, discrete energies, serialization."""

import numpy as np
import pytest

from carnotcap import Box, GridFunction, abelian, heisenberg, p_energy
from carnotcap.grid import (
    cell_center_hgrad,
    coverage_weights,
    horizontal_gradient,
    load_grid_csv,
    lp_norm_cells,
    sample_on_grid,
    save_grid_csv,
)


def unit_box(d):
    return Box((0.0,) * d, (1.0,) * d)


def test_box_validation():
    with pytest.raises(ValueError):
        Box((0.0, 0.0), (1.0,))
    with pytest.raises(ValueError):
        Box((0.0, 2.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        unit_box(2).normalize_resolution(1)
    with pytest.raises(ValueError):
        unit_box(2).normalize_resolution((4, 4, 4))
    assert unit_box(3).normalize_resolution(8) == (8, 8, 8)
    assert unit_box(2).volume() == 1.0


def test_box_contains_is_closed():
    box = Box((0.0, -1.0), (2.0, 1.0))
    pts = np.array([[0.0, -1.0], [2.0, 1.0], [1.0, 0.0], [2.0001, 0.0]])
    assert list(box.contains(pts)) == [True, True, True, False]


def test_gradient_of_linear_function():
    g = abelian(2)
    u = sample_on_grid(unit_box(2), 16, lambda p: p[:, 0])
    hg = horizontal_gradient(g, u)
    assert np.allclose(hg[..., 0], 1.0)
    assert np.allclose(hg[..., 1], 0.0)
    cg = cell_center_hgrad(g, u)
    assert cg.shape == (16, 16, 2)
    assert np.allclose(cg[..., 0], 1.0) and np.allclose(cg[..., 1], 0.0)


def test_heisenberg_gradient_of_center_coordinate():
    # u = t has Xu = 2y, Yu = -2x
    g = heisenberg(1)
    box = Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    u = sample_on_grid(box, 8, lambda p: p[:, 2])
    hg = horizontal_gradient(g, u)
    pts = u.node_points()
    assert np.allclose(hg[..., 0], 2.0 * pts[..., 1])
    assert np.allclose(hg[..., 1], -2.0 * pts[..., 0])

    cg = cell_center_hgrad(g, u)
    centers = box.center_axes(8)
    X, Y = np.meshgrid(centers[0], centers[1], indexing="ij")
    assert np.allclose(cg[..., 0], 2.0 * Y[:, :, None])
    assert np.allclose(cg[..., 1], -2.0 * X[:, :, None])


def test_p_energy_linear_profile():
    g = abelian(2)
    u = sample_on_grid(unit_box(2), 20, lambda p: p[:, 0])
    for p in (1.5, 2.0, 3.0):
        assert p_energy(g, u, p) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        p_energy(g, u, 1.0)


def test_p_energy_homogeneity_in_u():
    g = heisenberg(1)
    box = Box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((9, 9, 9))
    u = GridFunction(box, vals)
    u2 = GridFunction(box, 2.0 * vals)
    for p in (1.5, 2.0, 4.0):
        assert p_energy(g, u2, p) == pytest.approx(
            2.0**p * p_energy(g, u, p), rel=1e-12
        )


def test_p_energy_epsilon_floor():
    g = abelian(2)
    u = GridFunction(unit_box(2), np.zeros((5, 5)))
    assert p_energy(g, u, 2.0) == 0.0
    assert p_energy(g, u, 2.0, epsilon=1e-3) == pytest.approx(1e-6, rel=1e-12)


def test_coverage_weights_partition_and_monotonicity():
    box = unit_box(2)
    w_all = coverage_weights(box, 8, None)
    assert np.array_equal(w_all, np.ones((8, 8)))

    disc = lambda r: (lambda p: np.sum(p * p, axis=-1) <= r * r)
    w1 = coverage_weights(box, 8, disc(0.5))
    w2 = coverage_weights(box, 8, disc(0.7))
    assert np.all((w1 >= 0) & (w1 <= 1))
    assert np.all(w2 >= w1)  # larger set never loses weight
    # cells fully inside / outside the disc get exact weights
    assert w1[0, 0] == 1.0
    assert w1[7, 7] == 0.0
    # quarter disc area to a few percent
    area = np.sum(w1) / 64.0
    assert area == pytest.approx(np.pi * 0.25 / 4.0, rel=0.05)


def test_coverage_weights_deterministic():
    box = unit_box(2)
    pred = lambda p: p[:, 0] + p[:, 1] <= 0.9
    assert np.array_equal(
        coverage_weights(box, 16, pred), coverage_weights(box, 16, pred)
    )


def test_interpolation_matches_nodes_and_fills_outside():
    box = Box((0.0, 0.0), (2.0, 2.0))
    u = sample_on_grid(box, 10, lambda p: p[:, 0] * p[:, 1])
    pts = u.node_points().reshape(-1, 2)
    assert np.allclose(u.interpolate(pts), (pts[:, 0] * pts[:, 1]))
    # bilinear interpolant reproduces bilinear functions between nodes too
    mid = np.array([[0.37, 1.21], [1.9, 0.05]])
    assert np.allclose(u.interpolate(mid), mid[:, 0] * mid[:, 1])
    assert u.interpolate(np.array([[3.0, 1.0]])) == 0.0


def test_lp_norm_cells():
    field = np.array([1.0, -2.0])
    w = np.ones(2)
    assert lp_norm_cells(field, w, 0.5, 2.0) == pytest.approx(np.sqrt(2.5))
    with pytest.raises(ValueError):
        lp_norm_cells(field, w, 0.5, 0.0)


def test_grid_csv_roundtrip(tmp_path):
    box = Box((-1.0, 0.0, 2.0), (1.0, 3.0, 5.0))
    rng = np.random.default_rng(11)
    u = GridFunction(box, rng.standard_normal((4, 5, 6)))
    path = tmp_path / "u.csv"
    save_grid_csv(path, u)
    v = load_grid_csv(path)
    assert v.box == u.box
    assert np.array_equal(v.values, u.values)


def test_gridfunction_requires_three_nodes():
    with pytest.raises(ValueError):
        GridFunction(unit_box(2), np.zeros((2, 5)))
