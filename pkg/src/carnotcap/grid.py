"""Axis-aligned grids, grid functions and horizontal-gradient quadrature.

A GridFunction stores node values over a uniform grid on a box in graded
coordinates. Derivatives come in two flavors: node-based (central differences
inside, one-sided at the boundary) for reporting and norm checks, and
cell-center-based (corner averaging, the gradient of the multilinear
interpolant at the cell midpoint) for quadrature and the capacity energy.
Set predicates are vectorized callables points (m, d) -> bool (m,); cells cut
by a predicate boundary are weighted by a sampled coverage fraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .groups import GroupDescriptor

__all__ = [
    "Box",
    "GridFunction",
    "coverage_weights",
    "horizontal_gradient",
    "cell_center_hgrad",
    "p_energy",
    "lp_norm_cells",
    "sample_on_grid",
    "save_grid_csv",
    "load_grid_csv",
]

# fixed sub-cell sample offsets for coverage fractions; constant across calls
_N_COVERAGE_SAMPLES = 16


def _coverage_offsets(dim: int) -> np.ndarray:
    rng = np.random.default_rng(1234567)
    return rng.random((_N_COVERAGE_SAMPLES, dim))


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("box lo/hi dimension mismatch")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("box must have positive extent on every axis")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.lengths))

    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def normalize_resolution(self, resolution) -> tuple[int, ...]:
        if np.isscalar(resolution):
            res = (int(resolution),) * self.dim
        else:
            res = tuple(int(r) for r in resolution)
        if len(res) != self.dim:
            raise ValueError("resolution rank does not match box dimension")
        if any(r < 2 for r in res):
            raise ValueError("resolution must be >= 2 cells per axis")
        return res

    def cell_sizes(self, resolution) -> np.ndarray:
        res = self.normalize_resolution(resolution)
        return self.lengths / np.asarray(res)

    def node_axes(self, resolution) -> list[np.ndarray]:
        res = self.normalize_resolution(resolution)
        return [
            np.linspace(self.lo[k], self.hi[k], res[k] + 1) for k in range(self.dim)
        ]

    def center_axes(self, resolution) -> list[np.ndarray]:
        res = self.normalize_resolution(resolution)
        h = self.cell_sizes(res)
        return [
            self.lo[k] + h[k] * (np.arange(res[k]) + 0.5) for k in range(self.dim)
        ]

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((points >= lo) & (points <= hi), axis=-1)


def axes_to_points(axes: list[np.ndarray]) -> np.ndarray:
    """Stack a meshgrid of per-axis coordinates into an (..., d) point array."""
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def _axis_view(arr: np.ndarray, axis: int, dim: int) -> np.ndarray:
    """Reshape a 1d coordinate array so it broadcasts along a given grid axis."""
    shape = [1] * dim
    shape[axis] = arr.shape[0]
    return arr.reshape(shape)


class GridFunction:
    """Real-valued function sampled on the nodes of a uniform grid."""

    def __init__(self, box: Box, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != box.dim:
            raise ValueError("value array rank does not match box dimension")
        if any(s < 3 for s in values.shape):
            raise ValueError("grid needs at least 2 cells (3 nodes) per axis")
        self.box = box
        self.values = values
        self._interp = None

    @property
    def resolution(self) -> tuple[int, ...]:
        return tuple(s - 1 for s in self.values.shape)

    @property
    def node_axes(self) -> list[np.ndarray]:
        return self.box.node_axes(self.resolution)

    @property
    def cell_sizes(self) -> np.ndarray:
        return self.box.cell_sizes(self.resolution)

    def node_points(self) -> np.ndarray:
        return axes_to_points(self.node_axes)

    def interpolate(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation; zero outside the box."""
        if self._interp is None:
            from scipy.interpolate import RegularGridInterpolator

            self._interp = RegularGridInterpolator(
                self.node_axes,
                self.values,
                method="linear",
                bounds_error=False,
                fill_value=0.0,
            )
        points = np.asarray(points, dtype=float)
        return self._interp(points)


def sample_on_grid(box: Box, resolution, func) -> GridFunction:
    """Sample a vectorized callable points (m,d)->(m,) onto grid nodes."""
    axes = box.node_axes(resolution)
    pts = axes_to_points(axes)
    flat = pts.reshape(-1, box.dim)
    vals = np.asarray(func(flat), dtype=float).reshape(pts.shape[:-1])
    return GridFunction(box, vals)


def coverage_weights(box: Box, resolution, pred) -> np.ndarray:
    """Per-cell fraction of sample points satisfying pred, in [0, 1].

    Sixteen offsets per cell, rotated per cell by a fixed scramble so that
    quantization errors decorrelate between neighboring cells instead of
    phase-locking along a curved boundary. Exact 0/1 for cells whose samples
    are all outside/inside. Deterministic across calls, and invariant under
    translating or dilating the box (shifts attach to cell indices).
    """
    res = box.normalize_resolution(resolution)
    if pred is None:
        return np.ones(res)
    h = box.cell_sizes(res)
    centers = box.center_axes(res)
    counts = np.zeros(res)
    offsets = _coverage_offsets(box.dim)
    base = axes_to_points(centers) - h / 2.0
    flat_base = base.reshape(-1, box.dim)
    shifts = np.random.default_rng(7654321).random(flat_base.shape)
    for off in offsets:
        pts = flat_base + np.mod(off + shifts, 1.0) * h
        counts += np.asarray(pred(pts), dtype=float).reshape(res)
    return counts / len(offsets)


# -- derivatives -----------------------------------------------------------


def apply_frame_to_partials(
    g: GroupDescriptor, partials: list[np.ndarray], axes: list[np.ndarray]
) -> np.ndarray:
    """Combine Euclidean partials into horizontal components on a grid.

    partials[k] holds d/dx_k over a grid whose coordinates along axis k are
    axes[k]; returns an array with a trailing axis of length n1.
    """
    d = g.total_dim
    if g.kind == "abelian":
        return np.stack(partials, axis=-1)
    n = g.rank
    out = np.empty(partials[0].shape + (2 * n,))
    dt = partials[2 * n]
    for i in range(n):
        y_i = _axis_view(axes[n + i], n + i, d)
        x_i = _axis_view(axes[i], i, d)
        out[..., i] = partials[i] + 2.0 * y_i * dt
        out[..., n + i] = partials[n + i] - 2.0 * x_i * dt
    return out


def horizontal_gradient(g: GroupDescriptor, u: GridFunction) -> np.ndarray:
    """Node-wise horizontal gradient, shape nodes + (n1,).

    Central differences on interior nodes, one-sided at the boundary.
    """
    if g.total_dim != u.box.dim:
        raise ValueError("grid dimension does not match group dimension")
    if any(r < 3 for r in u.resolution):
        raise ValueError("horizontal_gradient needs at least 3 cells per axis")
    axes = u.node_axes
    grads = np.gradient(u.values, *axes)
    partials = [grads] if u.box.dim == 1 else list(grads)
    return apply_frame_to_partials(g, partials, axes)


def cell_center_partial(values: np.ndarray, k: int, h_k: float) -> np.ndarray:
    """d/dx_k of the multilinear interpolant at cell centers."""
    out = np.diff(values, axis=k) / h_k
    for j in range(values.ndim):
        if j == k:
            continue
        lo = tuple(
            slice(0, -1) if a == j else slice(None) for a in range(values.ndim)
        )
        hi = tuple(
            slice(1, None) if a == j else slice(None) for a in range(values.ndim)
        )
        out = 0.5 * (out[lo] + out[hi])
    return out


def cell_center_hgrad(g: GroupDescriptor, u: GridFunction) -> np.ndarray:
    """Horizontal gradient at cell centers, shape cells + (n1,)."""
    h = u.cell_sizes
    partials = [cell_center_partial(u.values, k, h[k]) for k in range(u.box.dim)]
    centers = u.box.center_axes(u.resolution)
    return apply_frame_to_partials(g, partials, centers)


def p_energy(
    g: GroupDescriptor,
    u: GridFunction,
    p: float,
    mask_pred=None,
    epsilon: float = 0.0,
) -> float:
    """Integral of |horizontal gradient|^p by the midpoint rule.

    Monotone nondecreasing in the mask since weights are pointwise fractions.
    """
    if p <= 1:
        raise ValueError("p must be > 1")
    hg = cell_center_hgrad(g, u)
    sq = np.sum(hg * hg, axis=-1) + epsilon * epsilon
    w = coverage_weights(u.box, u.resolution, mask_pred)
    cell_vol = float(np.prod(u.cell_sizes))
    return float(np.sum(w * sq ** (p / 2.0)) * cell_vol)


def lp_norm_cells(
    field: np.ndarray, weights: np.ndarray, cell_vol: float, p: float
) -> float:
    """(sum w |field|^p vol)^(1/p) over cells."""
    if p <= 0:
        raise ValueError("exponent must be positive")
    return float((np.sum(weights * np.abs(field) ** p) * cell_vol) ** (1.0 / p))


# -- serialization ---------------------------------------------------------

_GRID_HEADER = "# carnotcap gridfunction v1"


def save_grid_csv(path, u: GridFunction) -> None:
    """Write a GridFunction as CSV: box header, then node values in C order."""
    res = ",".join(str(r) for r in u.resolution)
    lo = ",".join(f"{v:.17g}" for v in u.box.lo)
    hi = ",".join(f"{v:.17g}" for v in u.box.hi)
    with open(path, "w", newline="") as fh:
        fh.write(_GRID_HEADER + "\n")
        fh.write(f"# lo={lo}\n# hi={hi}\n# resolution={res}\n")
        fh.write("value\n")
        for v in u.values.ravel(order="C"):
            fh.write(f"{v:.17g}\n")


def load_grid_csv(path) -> GridFunction:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _GRID_HEADER:
            raise ValueError(f"unrecognized grid file header: {header!r}")
        meta = {}
        for _ in range(3):
            line = fh.readline().strip()
            key, _, val = line.lstrip("# ").partition("=")
            meta[key] = val
        fh.readline()  # column label
        vals = np.array([float(line) for line in fh if line.strip()])
    lo = tuple(float(v) for v in meta["lo"].split(","))
    hi = tuple(float(v) for v in meta["hi"].split(","))
    res = tuple(int(v) for v in meta["resolution"].split(","))
    shape = tuple(r + 1 for r in res)
    return GridFunction(Box(lo, hi), vals.reshape(shape))
