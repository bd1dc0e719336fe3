"""Mappings with analytic horizontal differentials and their distortion.

A MapSpec bundles vectorized closures for one mapping between groups of the
same type: evaluation, the horizontal differential (the V1 -> V1 block of the
differential), the Jacobian, preimage enumeration with local index, and image
bounding boxes. The local p-distortion of a mapping is

    K_p(x, f) = |D_H f(x)| / J(x, f)^(1/p)

and the (p,q)-distortion coefficient over a region is its L_kappa norm with
1/kappa = 1/q - 1/p (essential sup when p = q, proxied by the grid max).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .groups import GroupDescriptor
from .grid import (
    Box,
    GridFunction,
    axes_to_points,
    cell_center_hgrad,
    coverage_weights,
    sample_on_grid,
)
from .reporting import VerificationReport

__all__ = [
    "MapSpec",
    "DistortionReport",
    "operator_norm_horizontal",
    "jacobian_from_hdiff",
    "local_distortion",
    "kappa_from_pq",
    "distortion_coefficient",
    "change_of_variables_check",
    "validate_mapspec",
]


@dataclass
class MapSpec:
    """Analytic description of one mapping f between Carnot groups.

    All callables are vectorized over a leading sample axis: points have
    shape (m, N). preimage_fn returns (stack, valid, index) where stack has
    shape (K, m, N) listing up to K preimage slots per target point, valid
    masks real slots and index holds the local topological index i(z, f).
    """

    name: str
    source: GroupDescriptor
    target: GroupDescriptor
    eval_fn: Callable[[np.ndarray], np.ndarray]
    hdiff_fn: Callable[[np.ndarray], np.ndarray]
    jac_fn: Callable[[np.ndarray], np.ndarray]
    preimage_fn: Optional[Callable] = None
    branch_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    image_box_fn: Optional[Callable[[Box], Box]] = None
    max_multiplicity: int = 1

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.eval_fn(np.atleast_2d(np.asarray(points, dtype=float)))

    def hdiff(self, points: np.ndarray) -> np.ndarray:
        return self.hdiff_fn(np.atleast_2d(np.asarray(points, dtype=float)))

    def jac(self, points: np.ndarray) -> np.ndarray:
        return self.jac_fn(np.atleast_2d(np.asarray(points, dtype=float)))

    def preimages(self, ys: np.ndarray):
        if self.preimage_fn is None:
            raise ValueError(f"map {self.name} has no preimage enumeration")
        return self.preimage_fn(np.atleast_2d(np.asarray(ys, dtype=float)))

    def branch_set(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.branch_fn is None:
            return np.zeros(points.shape[0], dtype=bool)
        return self.branch_fn(points)

    def local_index(self, points: np.ndarray) -> np.ndarray:
        """i(x, f): 1 off the branch set, the branch degree on it."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx = np.ones(points.shape[0], dtype=int)
        if self.branch_fn is not None:
            idx[self.branch_fn(points)] = self.max_multiplicity
        return idx

    def count_preimages(self, ys: np.ndarray, pred=None) -> np.ndarray:
        """N(y, f, A): number of preimages, optionally restricted to pred."""
        stack, valid, _ = self.preimages(ys)
        if pred is not None:
            K, m, N = stack.shape
            in_a = np.asarray(pred(stack.reshape(K * m, N))).reshape(K, m)
            valid = valid & in_a
        return valid.sum(axis=0)

    def image_pred(self, set_pred) -> Callable[[np.ndarray], np.ndarray]:
        """Predicate for f(S) via the preimage test: y in f(S) iff some
        enumerated preimage of y lies in S."""

        def pred(ys: np.ndarray) -> np.ndarray:
            stack, valid, _ = self.preimages(ys)
            K, m, N = stack.shape
            hit = np.asarray(set_pred(stack.reshape(K * m, N))).reshape(K, m)
            return np.any(valid & hit, axis=0)

        return pred

    def image_box(self, box: Box) -> Box:
        if self.image_box_fn is not None:
            return self.image_box_fn(box)
        # affine-image fallback: bounding box of the mapped corners
        corners = np.array(
            np.meshgrid(*[(lo, hi) for lo, hi in zip(box.lo, box.hi)], indexing="ij")
        ).reshape(box.dim, -1).T
        img = self(corners)
        return Box(tuple(img.min(axis=0)), tuple(img.max(axis=0)))


def operator_norm_horizontal(M: np.ndarray) -> np.ndarray:
    """Spectral norm of horizontal blocks, batched over leading axes."""
    M = np.asarray(M, dtype=float)
    if M.shape[-1] != M.shape[-2]:
        raise ValueError("horizontal block must be square")
    if M.shape[-1] == 2:
        # closed form: largest singular value of a 2x2 block
        fro2 = np.sum(M * M, axis=(-2, -1))
        det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        gap = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
        return np.sqrt(0.5 * (fro2 + gap))
    return np.linalg.svd(M, compute_uv=False)[..., 0]


def _symplectic_form(n: int) -> np.ndarray:
    omega = np.zeros((2 * n, 2 * n))
    omega[:n, n:] = np.eye(n)
    omega[n:, :n] = -np.eye(n)
    return omega


def jacobian_from_hdiff(g: GroupDescriptor, M: np.ndarray) -> np.ndarray:
    """Jacobian induced by a horizontal block through the graded structure.

    Abelian: det M. Heisenberg: the contact condition forces the center to
    scale by the factor lambda with M^T Omega M = lambda Omega, and the full
    Jacobian is det(M) * lambda; on H^1 every 2x2 M satisfies the relation
    with lambda = det M, giving det(M)^2.
    """
    M = np.asarray(M, dtype=float)
    n1 = g.horizontal_dim
    if M.shape[-1] != n1 or M.shape[-2] != n1:
        raise ValueError(
            f"horizontal block shape {M.shape[-2:]} does not match n1={n1}"
        )
    det = np.linalg.det(M)
    if g.kind == "abelian":
        return det
    if g.rank == 1:
        return det * det
    omega = _symplectic_form(g.rank)
    S = np.einsum("...ji,jk,...kl->...il", M, omega, M)
    lam = np.einsum("...ij,ij->...", S, omega) / np.sum(omega * omega)
    resid = np.max(
        np.abs(S - lam[..., None, None] * omega), axis=(-2, -1)
    )
    scale = np.maximum(np.max(np.abs(S), axis=(-2, -1)), 1e-300)
    if np.any(resid > 1e-8 * scale):
        raise ValueError("horizontal block is not horizontally symplectic")
    return det * lam


def local_distortion(g: GroupDescriptor, f: MapSpec, points: np.ndarray, p: float) -> np.ndarray:
    """Pointwise K_p(x, f) = |D_H f(x)| / J(x, f)^(1/p).

    Degenerate points follow the finite-distortion convention: J = 0 with a
    vanishing differential gives 0; J = 0 with a nonzero differential gives
    +inf. Negative Jacobians are rejected.
    """
    if p <= 1:
        raise ValueError("p must be > 1")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    M = f.hdiff(points)
    J = f.jac(points)
    if np.any(J < 0):
        raise ValueError("orientation-reversing point: J < 0")
    op = operator_norm_horizontal(M)
    out = np.empty_like(op)
    zero = J == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~zero] = op[~zero] / J[~zero] ** (1.0 / p)
    out[zero & (op == 0)] = 0.0
    out[zero & (op > 0)] = np.inf
    return out


def kappa_from_pq(p: float, q: float) -> tuple[float, Fraction | None]:
    """kappa with 1/kappa = 1/q - 1/p; inf (None fraction) when p = q.

    Kept in exact rational arithmetic of the binary float inputs so reports
    can show 1/kappa + 1/p = 1/q holding exactly.
    """
    if not (1 < q <= p):
        raise ValueError("need 1 < q <= p")
    if p == q:
        return math.inf, None
    pf, qf = Fraction(p), Fraction(q)
    kf = 1 / (1 / qf - 1 / pf)
    return float(kf), kf


@dataclass
class DistortionReport:
    map_name: str
    group: str
    p: float
    q: float
    kappa: float
    coefficient: float
    field: GridFunction
    diagnostics: dict = field(default_factory=dict)


def distortion_coefficient(
    g: GroupDescriptor,
    f: MapSpec,
    box: Box,
    p: float,
    q: float,
    resolution,
    mask_pred=None,
) -> DistortionReport:
    """K_{p,q}(f; mask) by grid quadrature of the pointwise field.

    For q < p this is the L_kappa norm over coverage-weighted cells; for
    p = q the essential sup is proxied by the max over grid nodes inside the
    mask. Any +inf value inside the mask is an error (unbounded distortion).
    """
    kappa, kappa_exact = kappa_from_pq(p, q)
    res = box.normalize_resolution(resolution)
    centers = axes_to_points(box.center_axes(res)).reshape(-1, box.dim)
    k_cells = local_distortion(g, f, centers, p).reshape(res)
    w = coverage_weights(box, res, mask_pred)
    if np.any(np.isinf(k_cells) & (w > 0)):
        raise ValueError("pointwise distortion is unbounded on the mask")

    nodes_pts = axes_to_points(box.node_axes(res)).reshape(-1, box.dim)
    k_nodes = local_distortion(g, f, nodes_pts, p)
    node_shape = tuple(r + 1 for r in res)
    field_gf = GridFunction(box, k_nodes.reshape(node_shape))

    cell_vol = float(np.prod(box.cell_sizes(res)))
    if math.isinf(kappa):
        if mask_pred is None:
            coeff = float(np.max(k_nodes))
        else:
            inside = np.asarray(mask_pred(nodes_pts), dtype=bool)
            if not np.any(inside):
                raise ValueError("mask contains no grid nodes")
            coeff = float(np.max(k_nodes[inside]))
    else:
        coeff = float((np.sum(w * k_cells**kappa) * cell_vol) ** (1.0 / kappa))
    diag = {
        "cells": int(np.prod(res)),
        "mask_volume": float(np.sum(w) * cell_vol),
        "field_max": float(np.max(k_cells[w > 0])) if np.any(w > 0) else 0.0,
    }
    if kappa_exact is not None:
        diag["kappa_exact"] = str(kappa_exact)
    return DistortionReport(
        map_name=f.name,
        group=g.short_name,
        p=p,
        q=q,
        kappa=kappa,
        coefficient=coeff,
        field=field_gf,
        diagnostics=diag,
    )


def _mc_mean_ci(samples: np.ndarray, z: float = 2.5758293035489004) -> tuple[float, float]:
    # z for a two-sided 99% normal interval
    m = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(len(samples)))
    return m, z * se


def change_of_variables_check(
    g: GroupDescriptor,
    f: MapSpec,
    box: Box,
    a_pred,
    u_fn,
    n_samples: int = 1_000_000,
    rng: np.random.Generator | None = None,
    tol: float = 0.02,
    slack: float = 0.0,
) -> VerificationReport:
    """Monte Carlo check of int_A (u o f) |J| dx = int u(y) N(y,f,A) dy.

    Both integrals carry 99% confidence intervals; the check passes when the
    intervals overlap or the relative gap is below tol.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)
    xs = rng.uniform(lo, hi, size=(n_samples, box.dim))
    ind = np.asarray(a_pred(xs), dtype=float)
    J = f.jac(xs)
    if not np.all(np.isfinite(J)):
        raise ValueError("non-integrable sample: Jacobian not finite on A")
    vals = u_fn(f(xs)) * np.abs(J) * ind
    lhs, lhs_ci = _mc_mean_ci(vals)
    lhs *= box.volume()
    lhs_ci *= box.volume()

    ibox = f.image_box(box)
    ys = rng.uniform(np.asarray(ibox.lo), np.asarray(ibox.hi), size=(n_samples, box.dim))
    counts = f.count_preimages(ys, pred=lambda z: a_pred(z) & box.contains(z))
    rvals = u_fn(ys) * counts
    rhs, rhs_ci = _mc_mean_ci(rvals)
    rhs *= ibox.volume()
    rhs_ci *= ibox.volume()

    gap = abs(lhs - rhs)
    overlap = gap <= lhs_ci + rhs_ci
    scale = max(abs(lhs), abs(rhs), 1e-300)
    passed = bool(overlap or gap / scale <= tol)
    return VerificationReport(
        check="change_of_variables",
        lhs=lhs,
        rhs=rhs,
        lhs_err=lhs_ci,
        rhs_err=rhs_ci,
        slack=tol,
        passed=passed,
        inputs={
            "map": f.name,
            "group": g.short_name,
            "samples": n_samples,
        },
        notes="integral identity; pass = overlapping 99% CIs or relative gap <= slack",
    )


def validate_mapspec(
    g: GroupDescriptor,
    f: MapSpec,
    points: np.ndarray,
    h: float = 1e-4,
) -> dict:
    """Self-validation of analytic map data against finite differences.

    Returns max relative errors for the horizontal block and Jacobian, the
    observed finite-difference order (Richardson, h vs h/2), the preimage
    round-trip error, and the contact defect for Heisenberg targets.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n1 = g.horizontal_dim
    analytic = f.hdiff(points)

    def fd_block(step):
        cols = []
        for i in range(n1):
            e = np.zeros(g.total_dim)
            e[i] = step
            fwd = f(g.compose(points, e))
            bwd = f(g.compose(points, -e))
            cols.append((fwd[:, :n1] - bwd[:, :n1]) / (2.0 * step))
        # column i = X_i f, rows = target components
        return np.stack(cols, axis=-1)

    fd_h = fd_block(h)
    fd_h2 = fd_block(h / 2.0)
    scale = np.maximum(np.abs(analytic).max(axis=(-2, -1)), 1e-12)
    err_h = np.abs(fd_h - analytic).max(axis=(-2, -1)) / scale
    err_h2 = np.abs(fd_h2 - analytic).max(axis=(-2, -1)) / scale
    if err_h.max() < 1e-11:
        order = math.inf  # exact to rounding: affine map
    else:
        mask = err_h2 > 1e-13
        order = float(np.log2((err_h[mask] / err_h2[mask])).min()) if mask.any() else math.inf

    jac_analytic = f.jac(points)
    jac_graded = jacobian_from_hdiff(g, analytic)
    jac_err = float(
        np.max(np.abs(jac_analytic - jac_graded) / np.maximum(np.abs(jac_graded), 1e-12))
    )

    out = {
        "hdiff_rel_err": float(err_h.max()),
        "hdiff_order": order,
        "jac_rel_err": jac_err,
    }

    if f.preimage_fn is not None:
        ys = f(points)
        stack, valid, index = f.preimages(ys)
        K, m, N = stack.shape
        imgs = f(stack.reshape(K * m, N)).reshape(K, m, N)
        diffs = np.linalg.norm(imgs - ys[None], axis=-1)
        out["preimage_err"] = float(np.max(np.where(valid, diffs, 0.0)))
        out["index_min"] = int(index[valid].min())

    if g.kind == "heisenberg":
        # contact defect: the center coefficient of X_i f in the left-invariant
        # basis at the image must vanish
        n = g.rank
        defects = []
        for i in range(n1):
            e = np.zeros(g.total_dim)
            e[i] = h
            fwd = f(g.compose(points, e))
            bwd = f(g.compose(points, -e))
            v = (fwd - bwd) / (2.0 * h)
            at = f(points)
            xt, yt = at[:, :n], at[:, n : 2 * n]
            center_coef = v[:, 2 * n] - np.sum(
                2.0 * yt * v[:, :n] - 2.0 * xt * v[:, n : 2 * n], axis=-1
            )
            defects.append(np.abs(center_coef) / np.maximum(np.linalg.norm(v, axis=-1), 1e-12))
        out["contact_defect"] = float(np.max(defects))
    return out
