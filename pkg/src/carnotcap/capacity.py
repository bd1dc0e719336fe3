"""Variational condenser p-capacity on axis-aligned grids.

The condenser (F0, F1; D) capacity is the infimal p-energy of the horizontal
gradient over functions that are 0 near F0 and >= 1 near F1. Discretely,
plate predicates pin node values to 0/1, the energy is the midpoint-rule
integral of |grad_H v|^p over coverage-weighted cells, and the minimum over
free nodes is found by a projected quasi-Newton descent (L-BFGS-B with box
bounds [0,1], a conforming relaxation: truncation never increases the
energy).

Plate boundaries get a cut-cell treatment: nodes are pinned exactly where
the predicates hold, and a cell partially covered by a plate carries the
stretch factor (1-c)^(1-p) of its covered fraction c, the exact correction
for a transition compressed into the uncovered remainder of the cell. The
covered fractions vary smoothly with grid alignment, which keeps the
discretization error decreasing under refinement instead of jumping with
the staircase phase of binary pinning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
from scipy.optimize import Bounds, minimize

from .groups import GroupDescriptor
from .grid import (
    Box,
    GridFunction,
    apply_frame_to_partials,
    axes_to_points,
    cell_center_partial,
    coverage_weights,
)
from .maps import MapSpec
from .reporting import VerificationReport

__all__ = [
    "DiscretizationError",
    "Condenser",
    "CapacityResult",
    "ring_capacity_oracle",
    "gauge_ring_condenser",
    "annulus_condenser",
    "dilate_condenser",
    "map_condenser",
    "solve_capacity",
    "solve_many",
    "capacity_scaling_check",
]

# node classes
FREE, PIN0, PIN1, INACTIVE = 0, 1, 2, 3


class DiscretizationError(ValueError):
    """Grid cannot represent the condenser (plates overlap/empty/too thin)."""


@dataclass
class Condenser:
    """Condenser (F0, F1; D): domain predicate plus two plate predicates.

    Predicates are vectorized callables points (m, d) -> bool (m,). F0 and F1
    should be closed regions with interior relative to the grid scale (thin
    sets are invisible to predicate sampling).
    """

    box: Box
    domain_pred: Callable
    f0_pred: Callable
    f1_pred: Callable
    name: str = "condenser"


def ring_capacity_oracle(n: int, p: float, r: float, R: float) -> float:
    """Exact Euclidean spherical-ring p-capacity via the radial extremal."""
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    if p <= 1:
        raise ValueError("p must be > 1")
    area = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)  # |S^{n-1}|
    if p == n:
        return area * math.log(R / r) ** (1 - n)
    beta = (p - n) / (p - 1.0)
    return area * abs(beta) ** (p - 1) * abs(R**beta - r**beta) ** (1 - p)


def gauge_ring_condenser(
    g: GroupDescriptor,
    r: float,
    R: float,
    center: np.ndarray | None = None,
    margin: float = 1.05,
    name: str | None = None,
) -> Condenser:
    """Ring condenser in gauge balls: F1 = closed ball r, F0 = complement of
    the open ball R, D = open ball R. On abelian groups this is the
    Euclidean spherical ring."""
    if not (0 < r < R):
        raise ValueError("need 0 < r < R")
    if center is None:
        center = g.identity()
    center = np.asarray(center, dtype=float)
    lo, hi = g.ball_bounding_box(center, margin * R)

    def dist(pts):
        return g.distance(np.broadcast_to(center, np.shape(pts)), pts)

    return Condenser(
        box=Box(tuple(lo), tuple(hi)),
        domain_pred=lambda pts: dist(pts) < R,
        f0_pred=lambda pts: dist(pts) >= R,
        f1_pred=lambda pts: dist(pts) <= r,
        name=name or f"{g.short_name}_ring_r{r:g}_R{R:g}",
    )


def annulus_condenser(
    r_hole: float,
    plate_lo: float,
    plate_hi: float,
    R: float,
    margin: float = 1.05,
    name: str | None = None,
) -> Condenser:
    """Planar condenser whose domain is the annulus r_hole < |x| < R, with an
    annular inner plate [plate_lo, plate_hi] and the outer complement as F0.
    The inner circle |x| = r_hole is a free boundary."""
    if not (0 < r_hole < plate_lo < plate_hi < R):
        raise ValueError("need 0 < r_hole < plate_lo < plate_hi < R")
    m = margin * R

    def rad(pts):
        return np.linalg.norm(pts, axis=-1)

    return Condenser(
        box=Box((-m, -m), (m, m)),
        domain_pred=lambda pts: (rad(pts) > r_hole) & (rad(pts) < R),
        f0_pred=lambda pts: rad(pts) >= R,
        f1_pred=lambda pts: (rad(pts) >= plate_lo) & (rad(pts) <= plate_hi),
        name=name or f"annulus_{r_hole:g}_{plate_lo:g}_{plate_hi:g}_{R:g}",
    )


def dilate_condenser(g: GroupDescriptor, c: Condenser, t: float) -> Condenser:
    """Image of a condenser under the dilation delta_t (box scales exactly,
    so equal resolutions give dilation-covariant discretizations)."""
    if t <= 0:
        raise ValueError("dilation parameter must be positive")
    lo = g.dilate(t, np.asarray(c.box.lo, dtype=float))
    hi = g.dilate(t, np.asarray(c.box.hi, dtype=float))

    def pull(pred):
        return lambda pts: pred(g.dilate(1.0 / t, np.asarray(pts, dtype=float)))

    return Condenser(
        box=Box(tuple(np.minimum(lo, hi)), tuple(np.maximum(lo, hi))),
        domain_pred=pull(c.domain_pred),
        f0_pred=pull(c.f0_pred),
        f1_pred=pull(c.f1_pred),
        name=f"dilate{t:g}_{c.name}",
    )


def map_condenser(f: MapSpec, c: Condenser) -> Condenser:
    """Image condenser (f(F0), f(F1); f(D)) via preimage-test predicates."""
    return Condenser(
        box=f.image_box(c.box),
        domain_pred=f.image_pred(c.domain_pred),
        f0_pred=f.image_pred(c.f0_pred),
        f1_pred=f.image_pred(c.f1_pred),
        name=f"{f.name}_image_{c.name}",
    )


# -- discretization ----------------------------------------------------------


def _sampled_hit(box: Box, res, pred, inflate: bool) -> np.ndarray:
    """Node mask: predicate true at the node. A plate that captures no node
    at all (sub-cell plate on a coarse grid) is rescued, when inflate is set,
    by testing the half-step stencil node + {-h/2, 0, h/2}^d."""
    axes = box.node_axes(res)
    pts = axes_to_points(axes)
    flat = pts.reshape(-1, box.dim)
    hit = np.asarray(pred(flat), dtype=bool)
    if inflate and not np.any(hit):
        h = box.cell_sizes(res)
        for off in product((-0.5, 0.0, 0.5), repeat=box.dim):
            if all(o == 0.0 for o in off):
                continue
            hit |= np.asarray(pred(flat + np.asarray(off) * h), dtype=bool)
    return hit.reshape(pts.shape[:-1])


def classify_nodes(box: Box, res, cond: Condenser, inflate: bool = True):
    """Node classes and cell coverage weights for one condenser.

    Raises DiscretizationError when the plates overlap, a plate captures no
    node (even after the sub-cell rescue when inflate is set), or no free
    node remains.
    """
    res = box.normalize_resolution(res)
    hit0 = _sampled_hit(box, res, cond.f0_pred, inflate)
    hit1 = _sampled_hit(box, res, cond.f1_pred, inflate)
    if np.any(hit0 & hit1):
        raise DiscretizationError(
            f"{cond.name}: plates overlap at this resolution (grid too coarse)"
        )
    if not np.any(hit0) or not np.any(hit1):
        raise DiscretizationError(f"{cond.name}: a plate captured no grid node")

    weights = coverage_weights(box, res, cond.domain_pred)
    active_cells = weights > 0
    node_shape = tuple(r + 1 for r in res)
    node_active = np.zeros(node_shape, dtype=bool)
    for off in product((0, 1), repeat=box.dim):
        sl = tuple(slice(o, r + o) for o, r in zip(off, res))
        node_active[sl] |= active_cells

    cls = np.full(node_shape, INACTIVE, dtype=np.int8)
    cls[node_active] = FREE
    cls[hit0] = PIN0
    cls[hit1] = PIN1
    if not np.any(cls == FREE):
        raise DiscretizationError(
            f"{cond.name}: no free node between the plates (grid too coarse)"
        )
    return cls, weights


# bound on the cut-cell stretch factor (1-c)^(-p): nearly swallowed cells
# would otherwise dominate the objective's curvature and stall the descent
_STRETCH_LIMIT = 256.0


def _plate_stretched_weights(
    box: Box, res, cond: Condenser, p: float, weights: np.ndarray
) -> np.ndarray:
    """Cut-cell energy weights: domain coverage with the plate stretch.

    In a cell whose fraction c lies in a pinned plate, the minimizer's
    transition is compressed into the remaining (1-c) of the cell, so the
    raw cell-center gradient underestimates the true one by (1-c). Scaling
    the cell energy by (1-c)^(1-p) is exact for a one-dimensional cut. With
    the F1 part removed from the active volume this reads
    active * (1-c)^(-p), and for outer-plate cells the domain coverage in
    `weights` already plays the role of the active volume.
    """
    c0 = coverage_weights(box, res, cond.f0_pred)
    c1 = coverage_weights(box, res, cond.f1_pred)
    active = np.clip(weights - c1, 0.0, 1.0)
    cap = 1.0 - _STRETCH_LIMIT ** (-1.0 / p)
    cpin = np.minimum(c0 + c1, cap)
    return active * (1.0 - cpin) ** (-p)


# -- discrete energy ----------------------------------------------------------


class _EnergyModel:
    """Discrete p-energy E(v) = sum_cells w |grad_H v(center)|^p vol and its
    exact gradient with respect to node values."""

    def __init__(self, g: GroupDescriptor, box: Box, res, weights, p: float, epsilon: float):
        self.g = g
        self.box = box
        self.res = box.normalize_resolution(res)
        self.p = p
        self.eps2 = epsilon * epsilon
        self.h = box.cell_sizes(self.res)
        self.cell_vol = float(np.prod(self.h))
        self.wq = weights * self.cell_vol
        self.centers = box.center_axes(self.res)
        self.node_shape = tuple(r + 1 for r in self.res)

    def _frame_transpose(self, W: np.ndarray) -> list[np.ndarray]:
        # adjoint of apply_frame_to_partials at cell centers
        g = self.g
        if g.kind == "abelian":
            return [W[..., k] for k in range(g.total_dim)]
        n = g.rank
        d = g.total_dim
        out = [W[..., k] for k in range(2 * n)]
        pt = np.zeros(W.shape[:-1])
        for i in range(n):
            shape = [1] * d
            shape[n + i] = self.centers[n + i].shape[0]
            y_i = self.centers[n + i].reshape(shape)
            shape = [1] * d
            shape[i] = self.centers[i].shape[0]
            x_i = self.centers[i].reshape(shape)
            pt += 2.0 * y_i * W[..., i] - 2.0 * x_i * W[..., n + i]
        out.append(pt)
        return out

    @staticmethod
    def _partial_adjoint(S: np.ndarray, k: int, h_k: float, node_shape) -> np.ndarray:
        d = len(node_shape)
        T = S / h_k
        for j in range(d):
            if j == k:
                continue
            new_shape = list(T.shape)
            new_shape[j] += 1
            T2 = np.zeros(new_shape)
            lo = tuple(slice(0, -1) if a == j else slice(None) for a in range(d))
            hi = tuple(slice(1, None) if a == j else slice(None) for a in range(d))
            T2[lo] += 0.5 * T
            T2[hi] += 0.5 * T
            T = T2
        out = np.zeros(node_shape)
        lo = tuple(slice(0, -1) if a == k else slice(None) for a in range(d))
        hi = tuple(slice(1, None) if a == k else slice(None) for a in range(d))
        out[hi] += T
        out[lo] -= T
        return out

    def hgrad_cells(self, values: np.ndarray) -> np.ndarray:
        partials = [
            cell_center_partial(values, k, self.h[k]) for k in range(self.box.dim)
        ]
        return apply_frame_to_partials(self.g, partials, self.centers)

    def energy(self, values: np.ndarray, epsilon: bool = True) -> float:
        hv = self.hgrad_cells(values)
        sq = np.sum(hv * hv, axis=-1)
        if epsilon:
            sq = sq + self.eps2
        return float(np.sum(self.wq * sq ** (self.p / 2.0)))

    def energy_and_grad(self, values: np.ndarray):
        hv = self.hgrad_cells(values)
        sq = np.sum(hv * hv, axis=-1) + self.eps2
        E = float(np.sum(self.wq * sq ** (self.p / 2.0)))
        coef = self.wq * self.p * sq ** ((self.p - 2.0) / 2.0)
        W = coef[..., None] * hv
        parts = self._frame_transpose(W)
        grad = np.zeros(self.node_shape)
        for k in range(self.box.dim):
            grad += self._partial_adjoint(parts[k], k, self.h[k], self.node_shape)
        return E, grad


@dataclass
class CapacityResult:
    value: float
    minimizer: GridFunction
    p: float
    resolution: tuple[int, ...]
    iterations: int
    grad_residual: float
    converged: bool
    epsilon: float
    diagnostics: dict = field(default_factory=dict)


def _level_resolutions(res: tuple[int, ...]) -> list[tuple[int, ...]]:
    levels = [res]
    while min(levels[0]) >= 32:
        levels.insert(0, tuple(max(r // 2, 2) for r in levels[0]))
    return levels


def _solve_level(g, cond, box, res, p, epsilon, tol, max_iters, init_gf, inflate):
    cls, weights = classify_nodes(box, res, cond, inflate=inflate)
    weights = _plate_stretched_weights(box, res, cond, p, weights)
    model = _EnergyModel(g, box, res, weights, p, epsilon)

    values = np.zeros(model.node_shape)
    values[cls == PIN1] = 1.0
    free = cls == FREE
    if init_gf is None:
        values[free] = 0.5
    else:
        pts = axes_to_points(box.node_axes(res)).reshape(-1, box.dim)
        interp = init_gf.interpolate(pts).reshape(model.node_shape)
        values[free] = np.clip(interp[free], 0.0, 1.0)

    e0, _ = model.energy_and_grad(values)
    scale = 1.0 / max(e0, 1e-30)

    def objective(x):
        values[free] = x
        E, Gr = model.energy_and_grad(values)
        return E * scale, Gr[free] * scale

    res_opt = minimize(
        objective,
        values[free],
        jac=True,
        method="L-BFGS-B",
        bounds=Bounds(0.0, 1.0),
        options={"maxiter": max_iters, "ftol": 1e-16, "gtol": tol, "maxcor": 12},
    )
    values[free] = np.clip(res_opt.x, 0.0, 1.0)

    _, grad = model.energy_and_grad(values)
    gfree = grad[free] * scale
    x = values[free]
    proj = np.where(x <= 1e-12, np.minimum(gfree, 0.0), gfree)
    proj = np.where(x >= 1.0 - 1e-12, np.maximum(gfree, 0.0), proj)
    residual = float(np.max(np.abs(proj))) if proj.size else 0.0

    return values, model, int(res_opt.nit), residual, res_opt, cls


def solve_capacity(
    g: GroupDescriptor,
    cond: Condenser,
    p: float,
    resolution,
    tol: float = 1e-6,
    max_iters: int = 1500,
    inflate_plates: bool = True,
    coarse_to_fine: bool = True,
    epsilon: float | None = None,
) -> CapacityResult:
    """Minimize the discrete p-energy of the condenser.

    tol is a relative projected-gradient tolerance (the objective is scaled
    by the initial energy). Non-convergence is flagged on the result, not
    raised. The reported value drops the smoothing epsilon.
    """
    if p <= 1:
        raise ValueError("p must be > 1 (p-energy not strictly convex otherwise)")
    box = cond.box
    res = box.normalize_resolution(resolution)
    if epsilon is None:
        epsilon = 1e-8 * box.diameter / max(res)

    levels = _level_resolutions(res) if coarse_to_fine else [res]
    init = None
    total_it = 0
    values = model = opt = None
    residual = math.inf
    for li, lres in enumerate(levels):
        last = li == len(levels) - 1
        try:
            values, model, nit, residual, opt, cls = _solve_level(
                g, cond, box, lres, p, epsilon,
                tol, max_iters if last else max(200, max_iters // 3),
                init, inflate_plates,
            )
        except DiscretizationError:
            if last:
                raise
            continue  # level too coarse for the plates; skip it
        total_it += nit
        init = GridFunction(box, values)

    minimizer = GridFunction(box, values)
    value = model.energy(values, epsilon=False)
    converged = bool(opt.success or residual <= 10.0 * tol)
    return CapacityResult(
        value=value,
        minimizer=minimizer,
        p=p,
        resolution=res,
        iterations=total_it,
        grad_residual=residual,
        converged=converged,
        epsilon=epsilon,
        diagnostics={
            "name": cond.name,
            "levels": len(levels),
            "free_nodes": int(np.sum(cls == FREE)),
            "pin0_nodes": int(np.sum(cls == PIN0)),
            "pin1_nodes": int(np.sum(cls == PIN1)),
            "status": str(opt.message),
        },
    )


def solve_many(jobs) -> list[CapacityResult]:
    """Batch front-end: jobs are (g, condenser, p, resolution[, kwargs]).

    Solves are independent; executed sequentially for determinism.
    """
    out = []
    for job in jobs:
        g, cond, p, res = job[:4]
        kwargs = job[4] if len(job) > 4 else {}
        out.append(solve_capacity(g, cond, p, res, **kwargs))
    return out


def capacity_scaling_check(
    g: GroupDescriptor,
    cond: Condenser,
    p: float,
    t: float,
    resolution,
    slack: float = 0.05,
    **solver_kwargs,
) -> VerificationReport:
    """Check cp_p(delta_t E) = t^(nu-p) cp_p(E) within slack.

    The report's lhs is the worst-side ratio max(rho, 1/rho) with
    rho = cp(delta_t E) / (t^(nu-p) cp(E)), so pass iff lhs <= 1 + slack.
    """
    base = solve_capacity(g, cond, p, resolution, **solver_kwargs)
    scaled = solve_capacity(g, dilate_condenser(g, cond, t), p, resolution, **solver_kwargs)
    expected = t ** (g.hom_dim - p) * base.value
    rho = scaled.value / expected if expected > 0 else math.inf
    worst = max(rho, 1.0 / rho) if rho > 0 else math.inf
    return VerificationReport(
        check="capacity_scaling",
        lhs=worst,
        rhs=1.0,
        slack=slack,
        passed=bool(worst <= 1.0 + slack and base.converged and scaled.converged),
        inputs={
            "group": g.short_name,
            "p": p,
            "t": t,
            "cp_base": base.value,
            "cp_scaled": scaled.value,
            "expected": expected,
            "resolution": max(base.resolution),
            "solver_converged": int(base.converged and scaled.converged),
        },
        notes="two-sided relative gap via worst-side ratio vs 1",
    )
