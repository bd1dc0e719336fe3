"""The analytic mapping zoo: formulas, preimages, parsing, estimators."""

import numpy as np
import pytest

from carnotcap import (
    Box,
    abelian,
    heisenberg,
    hpq_distortion_estimate,
    linear_distortion_estimate,
    local_distortion,
    radial_bound_sequence,
    zoo_anisotropic,
    zoo_dilation,
    zoo_from_name,
    zoo_identity,
    zoo_left_translation,
    zoo_linear,
    zoo_radial_power,
    zoo_table,
    zoo_winding,
)
from carnotcap.zoo import group_from_name

R2 = abelian(2)
H1 = heisenberg(1)

RADII = tuple(np.geomspace(1.0, 0.01, 9))


def off_origin_points(g, n=60, seed=1):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.3, 1.8, size=(n, g.total_dim))
    pts *= rng.choice([-1.0, 1.0], size=pts.shape)
    return pts


def test_table_is_stable():
    names = [e.name for e in zoo_table()]
    assert names == [
        "identity",
        "identity",
        "translation(1:0:0)",
        "dilation(t=2)",
        "dilation(t=2)",
        "linear(2:0:0:1)",
        "winding(k=2)",
        "winding(k=3)",
        "radial_power(alpha=2)",
        "anisotropic(a=2,b=1)",
    ]
    groups = [e.group.short_name for e in zoo_table()]
    assert groups == ["R2", "H1", "H1", "R2", "H1", "R2", "R2", "R2", "R2", "H1"]


def test_analytic_kp_matches_pointwise_distortion():
    # every entry's published K_p formula agrees with |D_H f| / J^(1/p)
    for entry in zoo_table():
        g = entry.group
        pts = off_origin_points(g)
        for p in (2.0, 3.5):
            want = entry.analytic_kp(pts, p)
            got = local_distortion(g, entry.spec, pts, p)
            assert np.allclose(got, want, rtol=1e-10), (entry.name, p)


def test_conformal_entries_have_unit_k_nu():
    # identity, translations and dilations are 1-quasiconformal at p = nu
    for entry in (
        zoo_identity(H1),
        zoo_left_translation(H1, (0.5, -0.5, 1.0)),
        zoo_dilation(H1, 3.0),
    ):
        pts = off_origin_points(H1)
        assert np.allclose(local_distortion(H1, entry.spec, pts, 4.0), 1.0)
    assert np.allclose(
        local_distortion(R2, zoo_dilation(R2, 3.0).spec, off_origin_points(R2), 2.0),
        1.0,
    )


def test_winding_preimages_index_branch():
    k = 3
    entry = zoo_winding(k)
    f = entry.spec
    assert entry.multiplicity == k
    assert f.max_multiplicity == k

    ys = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    stack, valid, index = f.preimages(ys)
    assert stack.shape == (k, 3, 2)
    # regular points have k distinct unit-index preimages
    assert valid[:, :2].all()
    assert np.all(index[:, :2] == 1)
    imgs = f(stack[:, 0, :])
    assert np.allclose(imgs, ys[0], atol=1e-12)
    pre0 = stack[:, 0, :]
    d = np.linalg.norm(pre0[:, None, :] - pre0[None, :, :], axis=-1)
    assert np.min(d[~np.eye(k, dtype=bool)]) > 0.5  # genuinely distinct slots

    # the origin is the branch point: one preimage carrying index k
    assert valid[0, 2] and not valid[1:, 2].any()
    assert index[0, 2] == k
    assert f.branch_set(np.array([[0.0, 0.0], [1.0, 0.0]])).tolist() == [True, False]
    assert f.local_index(np.array([[0.0, 0.0], [1.0, 0.0]])).tolist() == [k, 1]
    assert f.count_preimages(ys).tolist() == [k, k, 1]

    # K_p = k^(1 - 1/p) off the branch set
    pts = off_origin_points(R2)
    assert np.allclose(
        local_distortion(R2, f, pts, 2.0), np.sqrt(k), rtol=1e-10
    )


def test_winding_requires_k_at_least_two():
    with pytest.raises(ValueError):
        zoo_winding(1)


def test_radial_power_preimage_roundtrip():
    entry = zoo_radial_power(R2, 2.0)
    pts = off_origin_points(R2)
    ys = entry.spec(pts)
    stack, valid, index = entry.spec.preimages(ys)
    assert valid.all() and np.all(index == 1)
    assert np.allclose(stack[0], pts, rtol=1e-10)


def test_linear_rejects_bad_matrices():
    with pytest.raises(ValueError):
        zoo_linear(R2, [[1.0, 0.0], [0.0, -1.0]])  # orientation-reversing
    with pytest.raises(ValueError):
        zoo_linear(H1, [[2.0, 0.0], [0.0, 1.0]])  # abelian-only constructor
    with pytest.raises(ValueError):
        zoo_dilation(R2, 0.0)
    with pytest.raises(ValueError):
        zoo_anisotropic(-1.0, 2.0)


def test_zoo_from_name_parsing():
    assert zoo_from_name("winding(k=2)").name == "winding(k=2)"
    assert zoo_from_name("dilation(t=2)", group=H1).group.short_name == "H1"
    e = zoo_from_name("linear(a=2:0:0:1)")
    assert np.allclose(e.spec.jac(np.zeros((1, 2))), 2.0)
    e = zoo_from_name("translation(a=1:0:0)", group=H1)
    assert e.name == "translation(1:0:0)"
    assert zoo_from_name("anisotropic(a=2,b=1)").name == "anisotropic(a=2,b=1)"
    assert zoo_from_name("identity").group.short_name == "R2"
    assert zoo_from_name("radial_power(alpha=0.5)").notes.startswith("punctured")

    for bad in (
        "warp(k=2)",
        "winding",
        "winding(k)",
        "translation(a=1:0)",
        "linear(a=1:2:3)",
    ):
        with pytest.raises(ValueError):
            zoo_from_name(bad, group=H1 if "translation" in bad else None)


def test_group_from_name():
    assert group_from_name("R3").hom_dim == 3
    assert group_from_name("H1").hom_dim == 4
    with pytest.raises(ValueError):
        group_from_name("G2")


def test_radii_validation():
    f = zoo_identity(R2).spec
    x = np.zeros(2)
    with pytest.raises(ValueError):  # too few
        linear_distortion_estimate(R2, f, x, [1.0, 0.5, 0.01])
    with pytest.raises(ValueError):  # not decreasing
        linear_distortion_estimate(R2, f, x, [0.01, 0.5, 0.7, 1.0])
    with pytest.raises(ValueError):  # under two decades
        linear_distortion_estimate(R2, f, x, [1.0, 0.5, 0.1, 0.05])


def test_linear_distortion_identity_and_diagonal():
    x = np.array([0.3, -0.2])
    est = linear_distortion_estimate(
        R2, zoo_identity(R2).spec, x, RADII, rng=np.random.default_rng(2)
    )
    assert est["H"] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(est["ratios"], 1.0)

    est = linear_distortion_estimate(
        R2,
        zoo_linear(R2, np.diag([2.0, 1.0])).spec,
        x,
        RADII,
        n_dirs=4000,
        rng=np.random.default_rng(3),
    )
    assert est["H"] == pytest.approx(2.0, rel=0.01)


def test_linear_distortion_heisenberg_dilation_is_conformal():
    x = np.array([0.1, 0.2, -0.1])
    est = linear_distortion_estimate(
        H1, zoo_dilation(H1, 2.0).spec, x, RADII, rng=np.random.default_rng(4)
    )
    assert est["H"] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(est["L"], 2.0 * np.asarray(RADII))


def test_linear_distortion_winding():
    k = 2
    f = zoo_winding(k).spec
    # the map preserves |x|, so spheres about the branch point map to
    # spheres: H = 1 there despite the k-fold cover
    est = linear_distortion_estimate(
        R2, f, np.zeros(2), RADII, n_dirs=2000, rng=np.random.default_rng(5)
    )
    assert est["H"] == pytest.approx(1.0, abs=1e-9)
    # at a regular point the tangential stretch k dominates the radial 1
    small = tuple(np.geomspace(0.2, 0.002, 9))
    est = linear_distortion_estimate(
        R2, f, np.array([1.0, 0.0]), small, n_dirs=4000,
        rng=np.random.default_rng(5),
    )
    assert est["H"] == pytest.approx(k, rel=0.02)


def test_linear_distortion_domain_guard():
    box = Box((-0.5, -0.5), (0.5, 0.5))
    with pytest.raises(ValueError):
        linear_distortion_estimate(
            R2, zoo_identity(R2).spec, np.zeros(2), RADII, domain_box=box
        )


def test_hpq_estimate_identity_p_equals_q():
    # p = q: quotient denominator is 1 and the sequence is flat and finite
    est = hpq_distortion_estimate(
        R2,
        zoo_identity(R2).spec,
        np.zeros(2),
        2.0,
        2.0,
        lam=1.5,
        radii=RADII,
        n_vol=60_000,
        rng=np.random.default_rng(6),
    )
    q = est["quotients"]
    assert np.all(np.isfinite(q)) and np.all(q > 0)
    assert np.max(q) / np.min(q) < 1.3  # MC noise only
    # L = r and |f(B(lam r))| = pi (lam r)^2, so the level is 1/(pi lam^2)
    assert est["limsup_est"] == pytest.approx(1.0 / (np.pi * 1.5**2), rel=0.1)
    with pytest.raises(ValueError):
        hpq_distortion_estimate(
            R2, zoo_identity(R2).spec, np.zeros(2), 2.0, 2.0, lam=1.0, radii=RADII
        )


def test_radial_bound_sequence_finite_for_linear_map():
    est = radial_bound_sequence(
        R2,
        zoo_linear(R2, np.diag([2.0, 1.0])).spec,
        np.zeros(2),
        3.0,
        2.0,
        lam=1.5,
        radii=RADII,
        n_vol=50_000,
        rng=np.random.default_rng(7),
    )
    vals = est["values"]
    assert np.all(np.isfinite(vals)) and np.all(vals > 0)
    assert np.max(vals) / np.min(vals) < 2.0
