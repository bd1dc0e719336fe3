"""Push-forward of Sobolev test functions and the capacity/norm inequalities.

For a mapping f of bounded (p,q)-distortion the toolkit checks, numerically,
five inequality families plus a capacity-decay mechanism:

  capacity_inequality        cp_q(E)^(1/q) <= K_pq N^(1/p) cp_p(fE)^(1/p)
  image_capacity_bound       cp_s(fE)^(1/s) <= K_pq^(nu-1) cp_r(E)^(1/r)
  multiplicity_capacity_bound  ... with the extra factor N^((s-1)/s) / M(f,C)
  pushforward_norm           |f_* u|_{L^1_s} <= lam N^((s-1)/s) K_pq^(nu-1) |u|_{L^1_r}
  composition_norm           |u o f|_{L^1_q} <= K_pq (int |grad_H u|^p N dy)^(1/p)
  liouville_decay            cp_s(f core, f ring_R) -> 0 as R grows

with s = p/(p - (nu-1)) and r = q/(q - (nu-1)), both requiring q > nu - 1.
Capacities come from the variational solver, K_pq from grid quadrature of the
analytic distortion field, and N(f, A) from the map's multiplicity data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .capacity import (
    Condenser,
    gauge_ring_condenser,
    map_condenser,
    solve_capacity,
)
from .grid import Box, GridFunction, axes_to_points, cell_center_hgrad, coverage_weights, p_energy, sample_on_grid
from .groups import GroupDescriptor
from .maps import MapSpec, distortion_coefficient, kappa_from_pq
from .reporting import VerificationReport

__all__ = [
    "Exponents",
    "push_forward",
    "multiplicity_floor",
    "verify_capacity_inequality",
    "verify_image_capacity_bound",
    "verify_multiplicity_capacity_bound",
    "verify_pushforward_norm",
    "verify_composition_norm",
    "liouville_decay",
]


@dataclass(frozen=True)
class Exponents:
    """Exponent bookkeeping for one (p, q) pair on a group of homogeneous
    dimension nu: kappa from 1/kappa = 1/q - 1/p, and the conjugate pair
    s = p/(p-(nu-1)), r = q/(q-(nu-1)) used by the norm and image-capacity
    bounds. Requires q > nu - 1, so s and r are positive; r >= s always,
    with equality exactly when p = q."""

    p: float
    q: float
    nu: float
    lam: float = 1.0
    M: float = 1.0

    def __post_init__(self):
        if not (1 < self.q <= self.p):
            raise ValueError("need 1 < q <= p")
        if not self.q > self.nu - 1:
            raise ValueError(f"need q > nu - 1 = {self.nu - 1:g}")
        if self.lam <= 0 or self.M < 1:
            raise ValueError("lam must be positive and M >= 1")

    @property
    def kappa(self) -> float:
        return kappa_from_pq(self.p, self.q)[0]

    @property
    def s(self) -> float:
        return self.p / (self.p - (self.nu - 1.0))

    @property
    def r(self) -> float:
        return self.q / (self.q - (self.nu - 1.0))


def push_forward(
    f: MapSpec, u: GridFunction, lam: float = 1.0, resolution=None
) -> GridFunction:
    """f_* u on the image grid: (f_* u)(y) = lam * sum of i(z,f) u(z) over
    the preimages z of y.

    Off the branch set every preimage slot has index 1, so this is the plain
    preimage sum; at branch points the coinciding preimages enter with their
    index, keeping f_* u continuous where u is. Needs the map's preimage
    enumeration, and u must vanish on the boundary nodes of its own box
    (compact support in the domain), else values leak across the free
    boundary of the image grid.
    """
    if f.preimage_fn is None:
        raise ValueError(f"map {f.name} has no preimage enumeration")
    v = u.values
    for axis in range(u.box.dim):
        edge0 = np.take(v, 0, axis=axis)
        edge1 = np.take(v, -1, axis=axis)
        if np.any(edge0 != 0) or np.any(edge1 != 0):
            raise ValueError("u must vanish on the boundary of its grid")
    ibox = f.image_box(u.box)
    res = ibox.normalize_resolution(u.resolution if resolution is None else resolution)
    nodes = axes_to_points(ibox.node_axes(res))
    node_shape = nodes.shape[:-1]
    flat = nodes.reshape(-1, ibox.dim)
    stack, valid, index = f.preimages(flat)
    K, m, N = stack.shape
    vals = u.interpolate(stack.reshape(K * m, N)).reshape(K, m)
    out = lam * np.sum(np.where(valid, index * vals, 0.0), axis=0)
    return GridFunction(ibox, out.reshape(node_shape))


def multiplicity_floor(f: MapSpec, box: Box, set_pred, resolution=32) -> int:
    """M(f, C) = min over y in f(C) of the total index of preimages inside C,
    estimated on the grid nodes of C."""
    res = box.normalize_resolution(resolution)
    pts = axes_to_points(box.node_axes(res)).reshape(-1, box.dim)
    inside = np.asarray(set_pred(pts), dtype=bool)
    if not np.any(inside):
        raise ValueError("set captured no grid nodes")
    src = pts[inside]
    ys = f(src)
    stack, valid, index = f.preimages(ys)
    K, m, N = stack.shape
    within = np.asarray(set_pred(stack.reshape(K * m, N)), dtype=bool).reshape(K, m)
    # the slot reconstructing the queried node itself can drift across the
    # set boundary by rounding; that point is in the set by construction
    drift = np.linalg.norm(stack - src[None], axis=-1)
    within |= drift <= 1e-9 * (1.0 + np.linalg.norm(src, axis=-1))
    total = np.sum(np.where(valid & within, index, 0), axis=0)
    return int(np.min(total))


# the inequality checks carry multiplicative slack, so the solves behind them
# need five digits, not the oracle-grade default tolerance
_SOLVER_DEFAULTS = {"tol": 1e-5}


def _cap(g, cond, p, resolution, solver_kwargs, cache=None):
    """Capacity solve, memoized on (group, condenser name, p, resolution)
    when a cache dict is supplied (the suites reuse plates across checks)."""
    kw = {**_SOLVER_DEFAULTS, **(solver_kwargs or {})}
    if cache is None:
        return solve_capacity(g, cond, p, resolution, **kw)
    key = (g.short_name, cond.name, float(p), cond.box.normalize_resolution(resolution))
    if key not in cache:
        cache[key] = solve_capacity(g, cond, p, resolution, **kw)
    return cache[key]


def verify_capacity_inequality(
    f: MapSpec,
    cond: Condenser,
    p: float,
    q: float,
    resolution,
    slack: float = 0.1,
    image_resolution=None,
    solver_kwargs: dict | None = None,
    cache: dict | None = None,
) -> VerificationReport:
    """cp_q(E)^(1/q) <= K_{p,q}(f;D) N(f,D)^(1/p) cp_p(f E)^(1/p)."""
    g, gt = f.source, f.target
    cap_q = _cap(g, cond, q, resolution, solver_kwargs, cache)
    img = map_condenser(f, cond)
    cap_p = _cap(gt, img, p, image_resolution or resolution, solver_kwargs, cache)
    K = distortion_coefficient(
        g, f, cond.box, p, q, resolution, mask_pred=cond.domain_pred
    ).coefficient
    N = f.max_multiplicity
    lhs = cap_q.value ** (1.0 / q)
    rhs = K * N ** (1.0 / p) * cap_p.value ** (1.0 / p)
    return VerificationReport.from_inequality(
        check="capacity_inequality",
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        inputs={
            "map": f.name,
            "group": g.short_name,
            "p": p,
            "q": q,
            "K": K,
            "N": N,
            "cap_q": cap_q.value,
            "cap_p_image": cap_p.value,
            "resolution": max(cap_q.resolution),
            "condenser": cond.name,
        },
        notes="converged" if cap_q.converged and cap_p.converged else "solver did not converge",
    )


def verify_image_capacity_bound(
    f: MapSpec,
    cond: Condenser,
    exps: Exponents,
    resolution,
    slack: float = 0.1,
    image_resolution=None,
    solver_kwargs: dict | None = None,
    cache: dict | None = None,
) -> VerificationReport:
    """cp_s(f E)^(1/s) <= K_{p,q}(f;D)^(nu-1) cp_r(E)^(1/r)."""
    g, gt = f.source, f.target
    s, r = exps.s, exps.r
    img = map_condenser(f, cond)
    cap_s = _cap(gt, img, s, image_resolution or resolution, solver_kwargs, cache)
    cap_r = _cap(g, cond, r, resolution, solver_kwargs, cache)
    K = distortion_coefficient(
        g, f, cond.box, exps.p, exps.q, resolution, mask_pred=cond.domain_pred
    ).coefficient
    lhs = cap_s.value ** (1.0 / s)
    rhs = K ** (exps.nu - 1.0) * cap_r.value ** (1.0 / r)
    return VerificationReport.from_inequality(
        check="image_capacity_bound",
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        inputs={
            "map": f.name,
            "group": g.short_name,
            "p": exps.p,
            "q": exps.q,
            "s": s,
            "r": r,
            "K": K,
            "cap_s_image": cap_s.value,
            "cap_r": cap_r.value,
            "resolution": max(cap_r.resolution),
            "condenser": cond.name,
        },
        notes="converged" if cap_s.converged and cap_r.converged else "solver did not converge",
    )


def verify_multiplicity_capacity_bound(
    f: MapSpec,
    cond: Condenser,
    exps: Exponents,
    resolution,
    slack: float = 0.1,
    image_resolution=None,
    mult_resolution=32,
    solver_kwargs: dict | None = None,
    cache: dict | None = None,
) -> VerificationReport:
    """Image capacity bound sharpened by the multiplicity floor of the inner
    plate: cp_s(f E)^(1/s) <= N^((s-1)/s) / M(f, F1) K^(nu-1) cp_r(E)^(1/r)."""
    g, gt = f.source, f.target
    s, r = exps.s, exps.r
    M = multiplicity_floor(f, cond.box, cond.f1_pred, mult_resolution)
    N = f.max_multiplicity
    img = map_condenser(f, cond)
    cap_s = _cap(gt, img, s, image_resolution or resolution, solver_kwargs, cache)
    cap_r = _cap(g, cond, r, resolution, solver_kwargs, cache)
    K = distortion_coefficient(
        g, f, cond.box, exps.p, exps.q, resolution, mask_pred=cond.domain_pred
    ).coefficient
    lhs = cap_s.value ** (1.0 / s)
    rhs = (
        N ** ((s - 1.0) / s) / M * K ** (exps.nu - 1.0) * cap_r.value ** (1.0 / r)
    )
    return VerificationReport.from_inequality(
        check="multiplicity_capacity_bound",
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        inputs={
            "map": f.name,
            "group": g.short_name,
            "p": exps.p,
            "q": exps.q,
            "s": s,
            "r": r,
            "K": K,
            "N": N,
            "M": M,
            "cap_s_image": cap_s.value,
            "cap_r": cap_r.value,
            "resolution": max(cap_r.resolution),
            "condenser": cond.name,
        },
        notes="converged" if cap_s.converged and cap_r.converged else "solver did not converge",
    )


def verify_pushforward_norm(
    f: MapSpec,
    u: GridFunction,
    p: float,
    q: float,
    lam: float = 1.0,
    slack: float = 0.1,
    resolution=None,
    k_resolution=None,
) -> VerificationReport:
    """|f_* u | L^1_s(f D)| <= lam N^((s-1)/s) K_{p,q}^(nu-1) |u | L^1_r(D)|."""
    g, gt = f.source, f.target
    exps = Exponents(p, q, gt.hom_dim, lam=lam)
    s, r = exps.s, exps.r
    v = push_forward(f, u, lam=lam, resolution=resolution)
    lhs = p_energy(gt, v, s) ** (1.0 / s)
    K = distortion_coefficient(
        g, f, u.box, p, q, k_resolution or u.resolution
    ).coefficient
    N = f.max_multiplicity
    rhs = lam * N ** ((s - 1.0) / s) * K ** (exps.nu - 1.0) * p_energy(g, u, r) ** (1.0 / r)
    return VerificationReport.from_inequality(
        check="pushforward_norm",
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        inputs={
            "map": f.name,
            "group": g.short_name,
            "p": p,
            "q": q,
            "s": s,
            "r": r,
            "K": K,
            "N": N,
            "lam": lam,
            "resolution": max(u.resolution),
        },
        notes="seminorms are homogeneous Sobolev (horizontal gradient only)",
    )


def verify_composition_norm(
    f: MapSpec,
    u_img: GridFunction,
    domain_box: Box,
    p: float,
    q: float,
    slack: float = 0.1,
    resolution=None,
    domain_pred=None,
) -> VerificationReport:
    """|u o f | L^1_q(D)| <= K_{p,q}(f;D) (int |grad_H u|^p N(y,f,D) dy)^(1/p).

    u_img lives on a grid covering f(D); the composition is resampled on the
    domain grid and the right side integrates over the image grid cells with
    the preimage-count weight N(y, f, D).
    """
    g, gt = f.source, f.target
    res = domain_box.normalize_resolution(resolution if resolution is not None else u_img.resolution)
    w = sample_on_grid(domain_box, res, lambda pts: u_img.interpolate(f(pts)))
    lhs = p_energy(g, w, q, mask_pred=domain_pred) ** (1.0 / q)

    K = distortion_coefficient(
        g, f, domain_box, p, q, res, mask_pred=domain_pred
    ).coefficient
    hg = cell_center_hgrad(gt, u_img)
    mag = np.sqrt(np.sum(hg * hg, axis=-1))
    centers = axes_to_points(u_img.box.center_axes(u_img.resolution))
    flat = centers.reshape(-1, u_img.box.dim)
    if domain_pred is None:
        pre_pred = domain_box.contains
    else:
        pre_pred = lambda z: domain_box.contains(z) & np.asarray(domain_pred(z), bool)
    counts = f.count_preimages(flat, pred=pre_pred).reshape(mag.shape)
    cell_vol = float(np.prod(u_img.cell_sizes))
    rhs = K * float(np.sum(mag**p * counts) * cell_vol) ** (1.0 / p)
    return VerificationReport.from_inequality(
        check="composition_norm",
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        inputs={
            "map": f.name,
            "group": g.short_name,
            "p": p,
            "q": q,
            "K": K,
            "resolution": max(res),
        },
        notes="rhs integrates |grad_H u|^p against the preimage count",
    )


def liouville_decay(
    g: GroupDescriptor,
    f: MapSpec,
    p: float,
    q: float,
    core_r: float = 0.5,
    outer_radii=(1.0, 2.0, 4.0, 8.0, 16.0, 32.0),
    resolution=48,
    decay_target: float = 0.1,
    slack: float = 0.0,
    solver_kwargs: dict | None = None,
) -> dict:
    """Capacity-decay mechanism behind Liouville-type rigidity.

    For nu-1 < q <= p <= nu the image capacities cp_s(f(ring(core_r, R)))
    with s = p/(p-(nu-1)) > nu must vanish as R grows; a bounded-distortion
    map with a nondegenerate core cannot absorb that decay, so the check is
    cap(R_max)/cap(R_min) <= decay_target. Returns per-radius rows and a
    summary report.
    """
    nu = g.hom_dim
    if not (nu - 1 < q <= p <= nu):
        raise ValueError(
            f"exponents out of hypothesis: need nu-1 < q <= p <= nu (nu={nu:g})"
        )
    radii = [float(R) for R in outer_radii]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("need at least 2 strictly increasing outer radii")
    if core_r <= 0 or core_r >= radii[0]:
        raise ValueError("core radius must sit inside the smallest ring")
    s = p / (p - (nu - 1.0))
    rows = []
    caps = []
    for R in radii:
        cond = gauge_ring_condenser(g, core_r, R)
        img = map_condenser(f, cond)
        result = solve_capacity(
            f.target, img, s, resolution, **{**_SOLVER_DEFAULTS, **(solver_kwargs or {})}
        )
        caps.append(result.value)
        rows.append(
            {
                "radius": R,
                "capacity": result.value,
                "exponent": s,
                "converged": int(result.converged),
                "resolution": max(result.resolution),
            }
        )
    monotone = all(b <= a * 1.02 for a, b in zip(caps, caps[1:]))
    report = VerificationReport.from_inequality(
        check="liouville_decay",
        lhs=caps[-1] / caps[0],
        rhs=decay_target,
        slack=slack,
        inputs={
            "map": f.name,
            "group": g.short_name,
            "p": p,
            "q": q,
            "s": s,
            "core_r": core_r,
            "R_min": radii[0],
            "R_max": radii[-1],
            "monotone": int(monotone),
            "resolution": resolution if np.isscalar(resolution) else max(resolution),
        },
        notes="lhs is the capacity ratio cap(R_max)/cap(R_min); monotone=1 "
        "means the sequence is nonincreasing within 2% solver noise",
    )
    return {"radii": radii, "capacities": caps, "rows": rows, "report": report, "s": s}
