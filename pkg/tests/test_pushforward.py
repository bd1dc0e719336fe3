"""Push-forward operator, exponent bookkeeping, inequality verifiers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carnotcap import (
    Box,
    Exponents,
    GridFunction,
    abelian,
    gauge_ring_condenser,
    heisenberg,
    liouville_decay,
    multiplicity_floor,
    push_forward,
    verify_capacity_inequality,
    verify_composition_norm,
    verify_image_capacity_bound,
    verify_multiplicity_capacity_bound,
    verify_pushforward_norm,
    zoo_identity,
    zoo_linear,
    zoo_winding,
)
from carnotcap.capacity import annulus_condenser
from carnotcap.grid import sample_on_grid
from carnotcap.maps import MapSpec

R2 = abelian(2)


def radial_bump(r0, r1):
    # C^1 hat profile in |x|, equal to 1 at the midpoint, 0 outside (r0, r1)
    def u(pts):
        d = np.linalg.norm(pts, axis=-1)
        return np.clip(4.0 * (d - r0) * (r1 - d) / (r1 - r0) ** 2, 0.0, None)

    return u


def test_exponents_values():
    e = Exponents(4.0, 3.5, 4.0)
    assert e.s == pytest.approx(4.0)
    assert e.r == pytest.approx(7.0)
    assert e.kappa == pytest.approx(28.0)
    e = Exponents(3.0, 2.0, 2.0)
    assert e.s == pytest.approx(1.5)
    assert e.r == pytest.approx(2.0)
    e = Exponents(2.0, 2.0, 2.0)
    assert e.s == e.r == 2.0
    assert e.kappa == np.inf


def test_exponents_validation():
    with pytest.raises(ValueError):
        Exponents(2.0, 3.0, 2.0)  # q > p
    with pytest.raises(ValueError):
        Exponents(4.0, 3.0, 4.0)  # q = nu - 1 exactly
    with pytest.raises(ValueError):
        Exponents(4.0, 4.0, 4.0, lam=0.0)
    with pytest.raises(ValueError):
        Exponents(4.0, 4.0, 4.0, M=0.5)


@given(
    q=st.floats(3.01, 8.0),
    dp=st.floats(0.0, 4.0),
)
@settings(max_examples=300, deadline=None)
def test_exponents_order_property(q, dp):
    # on nu = 4: r >= s always, equality exactly when p = q, and the
    # kappa identity 1/kappa + 1/p = 1/q holds when p > q
    p = q + dp
    e = Exponents(p, q, 4.0)
    assert e.r >= e.s - 1e-12
    if p == q:
        assert e.r == e.s
    else:
        assert e.r > e.s
        assert 1.0 / e.kappa + 1.0 / p == pytest.approx(1.0 / q, rel=1e-12)


def test_push_forward_identity_is_resampling():
    box = Box((-1.0, -1.0), (1.0, 1.0))
    u = sample_on_grid(box, 32, radial_bump(0.2, 0.9))
    v = push_forward(zoo_identity(R2).spec, u)
    assert v.box == box
    assert np.allclose(v.values, u.values)
    v2 = push_forward(zoo_identity(R2).spec, u, lam=2.0)
    assert np.allclose(v2.values, 2.0 * u.values)


def test_push_forward_is_linear_in_u():
    box = Box((-1.0, -1.0), (1.0, 1.0))
    rng = np.random.default_rng(0)
    a = np.zeros((17, 17))
    b = np.zeros((17, 17))
    a[1:-1, 1:-1] = rng.standard_normal((15, 15))
    b[1:-1, 1:-1] = rng.standard_normal((15, 15))
    f = zoo_winding(2).spec
    va = push_forward(f, GridFunction(box, a))
    vb = push_forward(f, GridFunction(box, b))
    vab = push_forward(f, GridFunction(box, 3.0 * a - 0.5 * b))
    assert np.allclose(vab.values, 3.0 * va.values - 0.5 * vb.values)


def test_push_forward_winding_carries_factor_k():
    # radial u: every point of the image has k preimages with the same
    # u-value, so f_* u = k (u as a radial profile)
    k = 3
    box = Box((-1.5, -1.5), (1.5, 1.5))
    bump = radial_bump(0.25, 1.25)
    u = sample_on_grid(box, 128, bump)
    v = push_forward(zoo_winding(k).spec, u)
    rng = np.random.default_rng(1)
    ang = rng.uniform(0, 2 * np.pi, 400)
    rad = rng.uniform(0.35, 1.15, 400)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
    got = v.interpolate(pts)
    want = k * bump(pts)
    assert np.max(np.abs(got - want)) / np.max(want) < 0.02
    # the branch point carries index k, keeping f_* u continuous
    assert v.interpolate(np.zeros((1, 2)))[0] == pytest.approx(0.0, abs=1e-12)


def test_push_forward_requires_boundary_support():
    box = Box((0.1, 0.1), (1.0, 1.0))
    u = sample_on_grid(box, 8, lambda pts: np.ones(pts.shape[0]))
    with pytest.raises(ValueError):
        push_forward(zoo_identity(R2).spec, u)


def test_push_forward_requires_preimages():
    noinv = MapSpec(
        "noinv", R2, R2,
        eval_fn=lambda p: p,
        hdiff_fn=lambda p: np.broadcast_to(np.eye(2), (p.shape[0], 2, 2)),
        jac_fn=lambda p: np.ones(p.shape[0]),
    )
    box = Box((-1.0, -1.0), (1.0, 1.0))
    u = sample_on_grid(box, 8, radial_bump(0.2, 0.9))
    with pytest.raises(ValueError):
        push_forward(noinv, u)


def test_multiplicity_floor():
    # annulus radii chosen off the node lattice: a node exactly on the set
    # boundary has siblings that straddle it within rounding, and the floor
    # then degrades (safely) to the self-slot count
    box = Box((-1.6, -1.6), (1.6, 1.6))
    ann = lambda pts: (np.linalg.norm(pts, axis=-1) >= 0.51) & (
        np.linalg.norm(pts, axis=-1) <= 0.76
    )
    assert multiplicity_floor(zoo_identity(R2).spec, box, ann, 64) == 1
    # the whole annulus maps over itself k times
    assert multiplicity_floor(zoo_winding(3).spec, box, ann, 64) == 3
    # half-annulus: some image points have preimages outside the set
    half = lambda pts: ann(pts) & (pts[..., 0] > 0)
    assert multiplicity_floor(zoo_winding(3).spec, box, half, 64) == 1
    with pytest.raises(ValueError):
        multiplicity_floor(zoo_identity(R2).spec, box, lambda p: np.zeros(p.shape[0], bool), 8)


def test_capacity_inequality_identity_is_equality():
    cond = gauge_ring_condenser(R2, 0.5, 1.0)
    rep = verify_capacity_inequality(zoo_identity(R2).spec, cond, 2.0, 2.0, 48)
    assert rep.passed
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-9)  # K = N = 1, same solve
    assert rep.inputs["K"] == pytest.approx(1.0)
    assert rep.inputs["N"] == 1


def test_capacity_inequality_winding():
    f = zoo_winding(2).spec
    cond = annulus_condenser(0.25, 0.5, 0.75, 1.5)
    rep = verify_capacity_inequality(f, cond, 2.0, 2.0, 64, cache={})
    assert rep.passed
    assert rep.inputs["K"] == pytest.approx(np.sqrt(2.0), rel=1e-9)
    assert rep.ratio < 1.0 + 1e-9


def test_image_and_multiplicity_bounds_linear_map():
    f = zoo_linear(R2, np.diag([2.0, 1.0])).spec
    cond = gauge_ring_condenser(R2, 0.5, 1.0)
    exps = Exponents(3.0, 2.0, 2.0)
    cache = {}
    rep1 = verify_image_capacity_bound(f, cond, exps, 48, cache=cache)
    assert rep1.passed
    rep2 = verify_multiplicity_capacity_bound(f, cond, exps, 48, cache=cache)
    assert rep2.passed
    assert rep2.inputs["M"] == 1 and rep2.inputs["N"] == 1
    # with M = N = 1 the sharpened bound only differs by N^((s-1)/s)
    assert rep2.rhs == pytest.approx(rep1.rhs, rel=1e-12)


def test_multiplicity_bound_tightens_for_winding():
    # full annular plate: M = N = k, so the sharpened rhs drops by k^(1/s)
    f = zoo_winding(2).spec
    cond = annulus_condenser(0.25, 0.5, 0.75, 1.5)
    exps = Exponents(3.0, 2.0, 2.0)
    cache = {}
    loose = verify_image_capacity_bound(f, cond, exps, 64, cache=cache)
    tight = verify_multiplicity_capacity_bound(f, cond, exps, 64, cache=cache)
    assert loose.passed and tight.passed
    s = exps.s
    k = 2
    assert tight.rhs == pytest.approx(
        loose.rhs * k ** ((s - 1.0) / s) / k, rel=1e-12
    )
    assert tight.ratio > loose.ratio  # genuinely sharper


def test_cache_is_shared_across_verifiers():
    f = zoo_identity(R2).spec
    cond = gauge_ring_condenser(R2, 0.5, 1.0)
    cache = {}
    rep1 = verify_capacity_inequality(f, cond, 2.0, 2.0, 32, cache=cache)
    n1 = len(cache)
    rep2 = verify_capacity_inequality(f, cond, 2.0, 2.0, 32, cache=cache)
    assert len(cache) == n1  # second call reused every solve
    assert (rep1.lhs, rep1.rhs) == (rep2.lhs, rep2.rhs)
    # same plates at another exponent add solves instead of colliding
    verify_image_capacity_bound(f, cond, Exponents(3.0, 2.0, 2.0), 32, cache=cache)
    assert len(cache) > n1


def test_pushforward_norm_identity():
    box = Box((-1.0, -1.0), (1.0, 1.0))
    u = sample_on_grid(box, 48, radial_bump(0.2, 0.9))
    rep = verify_pushforward_norm(zoo_identity(R2).spec, u, 2.0, 2.0)
    assert rep.passed
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-9)


def test_pushforward_norm_winding():
    box = Box((-1.5, -1.5), (1.5, 1.5))
    u = sample_on_grid(box, 96, radial_bump(0.25, 1.25))
    rep = verify_pushforward_norm(zoo_winding(2).spec, u, 2.0, 2.0)
    assert rep.passed
    assert rep.inputs["N"] == 2


def test_pushforward_scaled_by_inverse_multiplicity_dominates_one():
    # admissibility transport: u >= 1 on the plate C and lam = 1/M(f, C)
    # give f_* u >= 1 on f(C)
    k = 3
    f = zoo_winding(k).spec
    box = Box((-1.6, -1.6), (1.6, 1.6))

    def plateau(pts):
        d = np.linalg.norm(pts, axis=-1)
        up = np.clip((d - 0.3) / 0.1, 0.0, 1.0)
        down = np.clip((1.4 - d) / 0.1, 0.0, 1.0)
        return np.minimum(up, down)

    u = sample_on_grid(box, 128, plateau)
    plate = lambda pts: (np.linalg.norm(pts, axis=-1) >= 0.51) & (
        np.linalg.norm(pts, axis=-1) <= 0.76
    )
    M = multiplicity_floor(f, box, plate, 64)
    assert M == k
    v = push_forward(f, u, lam=1.0 / M)
    rng = np.random.default_rng(2)
    ang = rng.uniform(0, 2 * np.pi, 300)
    rad = rng.uniform(0.51, 0.76, 300)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
    assert np.min(v.interpolate(pts)) >= 1.0 - 0.02


def test_composition_norm_identity_and_linear():
    box = Box((-1.0, -1.0), (1.0, 1.0))
    f_id = zoo_identity(R2).spec
    u = sample_on_grid(box, 48, radial_bump(0.2, 0.9))
    rep = verify_composition_norm(f_id, u, box, 2.0, 2.0)
    assert rep.passed
    assert rep.lhs == pytest.approx(rep.rhs, rel=0.02)  # equality case

    f = zoo_linear(R2, np.diag([2.0, 1.0])).spec
    ubig = sample_on_grid(Box((-2.0, -2.0), (2.0, 2.0)), 64, radial_bump(0.3, 1.8))
    rep = verify_composition_norm(f, ubig, box, 3.0, 2.0)
    assert rep.passed


def test_liouville_decay_planar_identity():
    out = liouville_decay(
        R2,
        zoo_identity(R2).spec,
        1.5,
        1.5,
        core_r=0.5,
        outer_radii=(1.0, 2.0, 4.0),
        resolution=48,
        decay_target=0.1,
    )
    rep = out["report"]
    assert rep.passed
    assert rep.inputs["monotone"] == 1
    assert out["s"] == pytest.approx(3.0)
    caps = out["capacities"]
    assert caps[0] > caps[1] > caps[2] > 0
    # ring capacity at s = 3 on R^2 decays like 1/R
    assert caps[2] / caps[0] == pytest.approx(
        ((1.0 - np.sqrt(0.5)) / (2.0 - np.sqrt(0.5))) ** 2, rel=0.1
    )


def test_liouville_rejects_out_of_hypothesis_exponents():
    f = zoo_identity(R2).spec
    with pytest.raises(ValueError):
        liouville_decay(R2, f, 4.0, 4.0)  # p > nu = 2
    with pytest.raises(ValueError):
        liouville_decay(R2, f, 1.5, 1.5, outer_radii=(2.0, 1.0))
    with pytest.raises(ValueError):
        liouville_decay(R2, f, 1.5, 1.5, core_r=2.0, outer_radii=(1.0, 2.0))
