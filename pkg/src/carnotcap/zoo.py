"""Analytic example mappings with exact differentials and multiplicity data.

Every entry carries a MapSpec whose closures are exact (no numerics), the
admissible (p,q) range for bounded distortion, and the analytic K_p formula
where known. These are the fixtures for every inequality check: identity,
left translations, dilations, abelian linear maps, the planar k-winding map
(the canonical open discrete non-homeomorphism, branch point at 0 with index
k), radial power maps (non-constant K_p exercising the L_kappa norm), and
the anisotropic contact map (ax, by, abt) on H^1.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .groups import GroupDescriptor, abelian, heisenberg, ball_volume
from .grid import Box
from .maps import MapSpec, distortion_coefficient, kappa_from_pq

__all__ = [
    "ZooEntry",
    "zoo_identity",
    "zoo_left_translation",
    "zoo_dilation",
    "zoo_linear",
    "zoo_winding",
    "zoo_radial_power",
    "zoo_anisotropic",
    "zoo_table",
    "zoo_from_name",
    "radial_power_coefficient_oracle",
    "gauge_sphere_points",
    "linear_distortion_estimate",
    "hpq_distortion_estimate",
    "radial_bound_sequence",
]


@dataclass
class ZooEntry:
    name: str
    group: GroupDescriptor
    spec: MapSpec
    kp_formula: str
    analytic_kp: Optional[Callable] = None  # (points, p) -> array
    multiplicity: int = 1
    branch_desc: str = "empty"
    admissible_desc: str = "1 < q <= p"
    admissible: Callable[[float, float], bool] = field(
        default=lambda p, q: 1 < q <= p
    )
    notes: str = ""


def _eye_hdiff(n1: int):
    eye = np.eye(n1)

    def hdiff(pts):
        return np.broadcast_to(eye, (pts.shape[0], n1, n1))

    return hdiff


def _const_jac(val: float):
    def jac(pts):
        return np.full(pts.shape[0], val)

    return jac


def _single_preimage(inv_fn):
    def pre(ys):
        z = inv_fn(ys)
        valid = np.ones((1, ys.shape[0]), dtype=bool)
        index = np.ones((1, ys.shape[0]), dtype=int)
        return z[None], valid, index

    return pre


def zoo_identity(g: GroupDescriptor) -> ZooEntry:
    spec = MapSpec(
        name="identity",
        source=g,
        target=g,
        eval_fn=lambda pts: pts.copy(),
        hdiff_fn=_eye_hdiff(g.horizontal_dim),
        jac_fn=_const_jac(1.0),
        preimage_fn=_single_preimage(lambda ys: ys.copy()),
        image_box_fn=lambda box: box,
    )
    return ZooEntry(
        name="identity",
        group=g,
        spec=spec,
        kp_formula="K_p = 1",
        analytic_kp=lambda pts, p: np.ones(pts.shape[0]),
        notes="J = 1, N = 1",
    )


def zoo_left_translation(g: GroupDescriptor, a) -> ZooEntry:
    a = g.validate_point(np.asarray(a, dtype=float))
    a_inv = g.inverse(a)
    spec = MapSpec(
        name=f"translation({':'.join(f'{v:g}' for v in a)})",
        source=g,
        target=g,
        eval_fn=lambda pts: g.compose(a, pts),
        hdiff_fn=_eye_hdiff(g.horizontal_dim),
        jac_fn=_const_jac(1.0),
        preimage_fn=_single_preimage(lambda ys: g.compose(a_inv, ys)),
    )
    return ZooEntry(
        name=spec.name,
        group=g,
        spec=spec,
        kp_formula="K_p = 1",
        analytic_kp=lambda pts, p: np.ones(pts.shape[0]),
        notes="gauge-distance preserving; K_p = 1",
    )


def zoo_dilation(g: GroupDescriptor, t: float) -> ZooEntry:
    if t <= 0:
        raise ValueError("dilation parameter must be positive")
    n1 = g.horizontal_dim
    eye_t = t * np.eye(n1)
    spec = MapSpec(
        name=f"dilation(t={t:g})",
        source=g,
        target=g,
        eval_fn=lambda pts: g.dilate(t, pts),
        hdiff_fn=lambda pts: np.broadcast_to(eye_t, (pts.shape[0], n1, n1)),
        jac_fn=_const_jac(t**g.hom_dim),
        preimage_fn=_single_preimage(lambda ys: g.dilate(1.0 / t, ys)),
    )
    nu = g.hom_dim
    return ZooEntry(
        name=spec.name,
        group=g,
        spec=spec,
        kp_formula=f"K_p = t^(1-nu/p), nu={nu}",
        analytic_kp=lambda pts, p: np.full(pts.shape[0], t ** (1.0 - nu / p)),
        notes=f"J = t^nu = {t**nu:g}",
    )


def zoo_linear(g: GroupDescriptor, A) -> ZooEntry:
    if g.kind != "abelian":
        raise ValueError("linear entries are abelian-only")
    A = np.asarray(A, dtype=float)
    n = g.rank
    if A.shape != (n, n):
        raise ValueError(f"matrix must be {n}x{n}")
    det = float(np.linalg.det(A))
    if det <= 0:
        raise ValueError("det A must be positive")
    A_inv = np.linalg.inv(A)
    opnorm = float(np.linalg.norm(A, 2))
    flat = ":".join(f"{v:g}" for v in A.ravel())
    spec = MapSpec(
        name=f"linear({flat})",
        source=g,
        target=g,
        eval_fn=lambda pts: pts @ A.T,
        hdiff_fn=lambda pts: np.broadcast_to(A, (pts.shape[0], n, n)),
        jac_fn=_const_jac(det),
        preimage_fn=_single_preimage(lambda ys: ys @ A_inv.T),
    )
    return ZooEntry(
        name=spec.name,
        group=g,
        spec=spec,
        kp_formula="K_p = |A| / (det A)^(1/p)",
        analytic_kp=lambda pts, p: np.full(pts.shape[0], opnorm / det ** (1.0 / p)),
        notes=f"|A|={opnorm:g}, det={det:g}",
    )


def zoo_winding(k: int) -> ZooEntry:
    """Planar winding (rho, theta) -> (rho, k theta): open, discrete,
    branch point at 0 with index k; singular values (1, k) off the branch."""
    if not (isinstance(k, (int, np.integer)) and k >= 2):
        raise ValueError("winding order k must be an integer >= 2")
    g = abelian(2)
    k = int(k)

    def ev(pts):
        rho = np.hypot(pts[:, 0], pts[:, 1])
        th = np.arctan2(pts[:, 1], pts[:, 0])
        return np.stack([rho * np.cos(k * th), rho * np.sin(k * th)], axis=-1)

    def hdiff(pts):
        th = np.arctan2(pts[:, 1], pts[:, 0])
        c1, s1 = np.cos(th), np.sin(th)
        ck, sk = np.cos(k * th), np.sin(k * th)
        M = np.empty(pts.shape[:1] + (2, 2))
        M[:, 0, 0] = ck * c1 + k * sk * s1
        M[:, 0, 1] = ck * s1 - k * sk * c1
        M[:, 1, 0] = sk * c1 - k * ck * s1
        M[:, 1, 1] = sk * s1 + k * ck * c1
        return M

    def pre(ys):
        rho = np.hypot(ys[:, 0], ys[:, 1])
        phi = np.arctan2(ys[:, 1], ys[:, 0])
        m = ys.shape[0]
        stack = np.empty((k, m, 2))
        for j in range(k):
            ang = (phi + 2.0 * math.pi * j) / k
            stack[j, :, 0] = rho * np.cos(ang)
            stack[j, :, 1] = rho * np.sin(ang)
        origin = rho == 0
        valid = np.ones((k, m), dtype=bool)
        valid[1:, origin] = False  # preimages coincide at the branch point
        index = np.ones((k, m), dtype=int)
        index[0, origin] = k
        return stack, valid, index

    def ibox(box: Box) -> Box:
        corners = np.array(
            np.meshgrid(*[(lo, hi) for lo, hi in zip(box.lo, box.hi)], indexing="ij")
        ).reshape(2, -1).T
        m = float(np.max(np.linalg.norm(corners, axis=-1)))
        return Box((-m, -m), (m, m))

    spec = MapSpec(
        name=f"winding(k={k})",
        source=g,
        target=g,
        eval_fn=ev,
        hdiff_fn=hdiff,
        jac_fn=_const_jac(float(k)),
        preimage_fn=pre,
        branch_fn=lambda pts: np.hypot(pts[:, 0], pts[:, 1]) == 0,
        image_box_fn=ibox,
        max_multiplicity=k,
    )
    return ZooEntry(
        name=spec.name,
        group=g,
        spec=spec,
        kp_formula="K_p = k^(1-1/p)  (K_2 = sqrt(k))",
        analytic_kp=lambda pts, p: np.full(pts.shape[0], k ** (1.0 - 1.0 / p)),
        multiplicity=k,
        branch_desc="{0}, index k",
        notes=f"J = k = {k}; N(f, annulus) = {k}",
    )


def zoo_radial_power(g: GroupDescriptor, alpha: float) -> ZooEntry:
    """x -> x |x|^(alpha-1) on R^n; K_p(x) is a power of |x|, so membership
    in the (p,q) class is a kappa-integrability condition near 0."""
    if g.kind != "abelian":
        raise ValueError("radial power entries are abelian-only")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = g.rank

    def radial_factor(r, expo):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, r**expo, 0.0 if expo > 0 else np.inf)
        return np.where((r == 0) & (expo == 0), 1.0, out)

    def ev(pts):
        r = np.linalg.norm(pts, axis=-1, keepdims=True)
        return pts * radial_factor(r, alpha - 1.0)

    def hdiff(pts):
        r = np.linalg.norm(pts, axis=-1)
        f = radial_factor(r, alpha - 1.0)
        safe = np.where(r > 0, r, 1.0)
        hat = pts / safe[:, None]
        M = f[:, None, None] * (
            np.eye(n)[None] + (alpha - 1.0) * hat[:, :, None] * hat[:, None, :]
        )
        return M

    def jac(pts):
        r = np.linalg.norm(pts, axis=-1)
        return alpha * radial_factor(r, (alpha - 1.0) * n)

    def pre_inv(ys):
        r = np.linalg.norm(ys, axis=-1, keepdims=True)
        return ys * radial_factor(r, 1.0 / alpha - 1.0)

    def ibox(box: Box) -> Box:
        corners = np.array(
            np.meshgrid(*[(lo, hi) for lo, hi in zip(box.lo, box.hi)], indexing="ij")
        ).reshape(n, -1).T
        m = float(np.max(np.linalg.norm(corners, axis=-1)) ** alpha)
        return Box((-m,) * n, (m,) * n)

    spec = MapSpec(
        name=f"radial_power(alpha={alpha:g})",
        source=g,
        target=g,
        eval_fn=ev,
        hdiff_fn=hdiff,
        jac_fn=jac,
        preimage_fn=_single_preimage(pre_inv),
        image_box_fn=ibox,
    )
    def analytic_kp(pts, p):
        r = np.linalg.norm(pts, axis=-1)
        expo = (alpha - 1.0) * (1.0 - n / p)
        return (max(alpha, 1.0) / alpha ** (1.0 / p)) * radial_factor(r, expo)

    def admissible(p, q):
        if not 1 < q <= p:
            return False
        expo = (alpha - 1.0) * (1.0 - n / p)
        if p == q:
            return expo >= 0  # bounded near 0 on the punctured ball
        kappa, _ = kappa_from_pq(p, q)
        return expo * kappa + n > 0  # kappa-integrable near 0

    return ZooEntry(
        name=spec.name,
        group=g,
        spec=spec,
        kp_formula="K_p = max(alpha,1)/alpha^(1/p) * |x|^((alpha-1)(1-n/p))",
        analytic_kp=analytic_kp,
        admissible_desc="kappa-integrability of the |x| power near 0",
        admissible=admissible,
        notes="punctured-ball domain when alpha != 1",
    )


def zoo_anisotropic(a: float, b: float) -> ZooEntry:
    """(x, y, t) -> (ax, by, abt) on H^1: contact, D_H f = diag(a,b),
    J = (ab)^2; reduces to the dilation delta_s when a = b = s."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    g = heisenberg(1)
    D = np.diag([a, b])
    scale = np.array([a, b, a * b])

    spec = MapSpec(
        name=f"anisotropic(a={a:g},b={b:g})",
        source=g,
        target=g,
        eval_fn=lambda pts: pts * scale,
        hdiff_fn=lambda pts: np.broadcast_to(D, (pts.shape[0], 2, 2)),
        jac_fn=_const_jac((a * b) ** 2),
        preimage_fn=_single_preimage(lambda ys: ys / scale),
    )
    return ZooEntry(
        name=spec.name,
        group=g,
        spec=spec,
        kp_formula="K_p = max(a,b)/(ab)^(2/p)",
        analytic_kp=lambda pts, p: np.full(
            pts.shape[0], max(a, b) / (a * b) ** (2.0 / p)
        ),
        notes=f"contact; J = (ab)^2 = {(a*b)**2:g}",
    )


def radial_power_coefficient_oracle(
    alpha: float, n: int, p: float, q: float, R: float = 1.0
) -> float:
    """Closed-form K_{p,q} of the radial power map on the punctured ball B_R:
    the L_kappa norm of c |x|^e reduces to a 1-D radial integral."""
    c = max(alpha, 1.0) / alpha ** (1.0 / p)
    expo = (alpha - 1.0) * (1.0 - n / p)
    area = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    if p == q:
        if expo < 0:
            return math.inf
        return c * R**expo
    kappa, _ = kappa_from_pq(p, q)
    power = expo * kappa + n
    if power <= 0:
        return math.inf
    integral = area * R**power / power
    return c * integral ** (1.0 / kappa)


# -- canonical table ---------------------------------------------------------


def zoo_table() -> list[ZooEntry]:
    """Canonical entries in a fixed, deterministic order."""
    return [
        zoo_identity(abelian(2)),
        zoo_identity(heisenberg(1)),
        zoo_left_translation(heisenberg(1), (1.0, 0.0, 0.0)),
        zoo_dilation(abelian(2), 2.0),
        zoo_dilation(heisenberg(1), 2.0),
        zoo_linear(abelian(2), [[2.0, 0.0], [0.0, 1.0]]),
        zoo_winding(2),
        zoo_winding(3),
        zoo_radial_power(abelian(2), 2.0),
        zoo_anisotropic(2.0, 1.0),
    ]


_GROUPS = {"R2": abelian(2), "R3": abelian(3), "H1": heisenberg(1)}


def group_from_name(name: str) -> GroupDescriptor:
    m = re.fullmatch(r"([RH])(\d+)", name.strip())
    if not m:
        raise ValueError(f"unknown group spec {name!r} (use R<n> or H<n>)")
    n = int(m.group(2))
    return abelian(n) if m.group(1) == "R" else heisenberg(n)


def zoo_from_name(text: str, group: GroupDescriptor | None = None) -> ZooEntry:
    """Build an entry from a config string like 'winding(k=2)' or
    'dilation(t=2)'. Vector/matrix values use ':'-separated components."""
    text = text.strip()
    m = re.fullmatch(r"(\w+)(?:\((.*)\))?", text)
    if not m:
        raise ValueError(f"cannot parse map name {text!r}")
    name, argstr = m.group(1), m.group(2) or ""
    kwargs = {}
    if argstr.strip():
        for item in argstr.split(","):
            key, _, val = item.partition("=")
            if not _:
                raise ValueError(f"malformed map parameter {item!r} in {text!r}")
            kwargs[key.strip()] = val.strip()

    def fval(key, default=None):
        if key not in kwargs:
            if default is None:
                raise ValueError(f"map {name!r} needs parameter {key!r}")
            return default
        return float(kwargs[key])

    if name == "identity":
        return zoo_identity(group or _GROUPS["R2"])
    if name == "translation":
        g = group or _GROUPS["H1"]
        vec = [float(v) for v in kwargs.get("a", "").split(":") if v]
        if len(vec) != g.total_dim:
            raise ValueError(
                f"translation vector needs {g.total_dim} ':'-separated components"
            )
        return zoo_left_translation(g, vec)
    if name == "dilation":
        return zoo_dilation(group or _GROUPS["R2"], fval("t"))
    if name == "linear":
        g = group or _GROUPS["R2"]
        vals = [float(v) for v in kwargs.get("a", "").split(":") if v]
        n = g.rank
        if len(vals) != n * n:
            raise ValueError(f"linear matrix needs {n*n} ':'-separated entries")
        return zoo_linear(g, np.asarray(vals).reshape(n, n))
    if name == "winding":
        return zoo_winding(int(fval("k")))
    if name == "radial_power":
        return zoo_radial_power(group or _GROUPS["R2"], fval("alpha"))
    if name == "anisotropic":
        return zoo_anisotropic(fval("a"), fval("b"))
    raise ValueError(f"unknown zoo map {name!r}")


# -- metric distortion estimators --------------------------------------------

_UNIT_BALL_CACHE: dict[tuple[str, int], float] = {}


def _unit_ball_volume(g: GroupDescriptor) -> float:
    key = (g.kind, g.rank)
    if key not in _UNIT_BALL_CACHE:
        _UNIT_BALL_CACHE[key] = ball_volume(
            g, 1.0, samples=400_000, rng=np.random.default_rng(777)
        )
    return _UNIT_BALL_CACHE[key]


def gauge_sphere_points(
    g: GroupDescriptor, x: np.ndarray, r: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n points at exact gauge distance r from x: random directions projected
    onto the sphere along dilation orbits, then left-translated to x."""
    xi = rng.standard_normal((n, g.total_dim))
    rho = g.gauge_norm(xi)
    rho = np.where(rho > 0, rho, 1.0)
    s = r / rho
    if g.kind == "abelian":
        proj = xi * s[:, None]
    else:
        proj = np.empty_like(xi)
        k = 2 * g.rank
        proj[:, :k] = xi[:, :k] * s[:, None]
        proj[:, k] = xi[:, k] * s * s
    return g.compose(np.asarray(x, dtype=float), proj)


def _check_radii(radii) -> np.ndarray:
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 4:
        raise ValueError("need a list of at least 4 radii")
    if np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise ValueError("radii must be positive and strictly decreasing")
    if radii[0] / radii[-1] < 100.0:
        raise ValueError("radius list must span at least 2 decades")
    return radii


def _smallest_quartile(values: np.ndarray) -> np.ndarray:
    # radii are decreasing, so the tail holds the smallest quartile
    k = max(1, len(values) // 4)
    return values[-k:]


def linear_distortion_estimate(
    g: GroupDescriptor,
    f: MapSpec,
    x,
    radii,
    n_dirs: int = 512,
    rng: np.random.Generator | None = None,
    domain_box: Box | None = None,
) -> dict:
    """H(x,f) estimate: max/min image displacement over sampled gauge
    spheres; the limsup proxy is the max ratio over the smallest quartile."""
    radii = _check_radii(radii)
    if rng is None:
        rng = np.random.default_rng(0)
    x = g.validate_point(np.asarray(x, dtype=float))
    if domain_box is not None:
        lo, hi = g.ball_bounding_box(x, float(radii[0]))
        if not (np.all(lo >= np.asarray(domain_box.lo)) and np.all(hi <= np.asarray(domain_box.hi))):
            raise ValueError("largest radius exceeds the declared domain")
    fx = f(x[None])[0]
    L = np.empty(len(radii))
    ell = np.empty(len(radii))
    for i, r in enumerate(radii):
        w = gauge_sphere_points(g, x, float(r), n_dirs, rng)
        d = g.distance(np.broadcast_to(fx, (n_dirs, g.total_dim)), f(w))
        L[i] = np.max(d)
        ell[i] = np.min(d)
        if ell[i] == 0:
            raise ValueError("image sphere collapsed: f constant near x")
    ratios = L / ell
    return {
        "radii": radii,
        "L": L,
        "l": ell,
        "ratios": ratios,
        "H": float(np.max(_smallest_quartile(ratios))),
    }


def _image_ball_volume(
    g: GroupDescriptor, f: MapSpec, x, r: float, n_vol: int, rng: np.random.Generator
) -> float:
    """|f(B(x,r))| by MC over the image bounding box with a preimage test."""
    lo, hi = g.ball_bounding_box(x, r)
    ball_box = Box(tuple(lo), tuple(hi))
    ibox = f.image_box(ball_box)
    ys = rng.uniform(np.asarray(ibox.lo), np.asarray(ibox.hi), size=(n_vol, g.total_dim))
    stack, valid, _ = f.preimages(ys)
    K, m, N = stack.shape
    d = g.distance(np.broadcast_to(x, (K * m, N)), stack.reshape(K * m, N)).reshape(K, m)
    member = np.any(valid & (d <= r), axis=0)
    return ibox.volume() * float(np.mean(member))


def hpq_distortion_estimate(
    g: GroupDescriptor,
    f: MapSpec,
    x,
    p: float,
    q: float,
    lam: float,
    radii,
    resolution: int = 16,
    n_sphere: int = 512,
    n_vol: int = 40_000,
    rng: np.random.Generator | None = None,
    set_function=None,
) -> dict:
    """Per-radius quotient L_f^p(x,r) r^(nu-p) / |f(B(x,lam r))| divided by
    (Phi(B(x,lam r)) / |B(x,r)|)^((p-q)/q), Phi defaulting to the distortion
    set function S -> K_{p,q}(f;S)^(pq/(p-q)). Boundedness diagnostic only."""
    if lam <= 1:
        raise ValueError("lam must exceed 1")
    radii = _check_radii(radii)
    if rng is None:
        rng = np.random.default_rng(0)
    x = g.validate_point(np.asarray(x, dtype=float))
    nu = g.hom_dim
    fx = f(x[None])[0]
    vol_unit = _unit_ball_volume(g)

    quotients = np.empty(len(radii))
    for i, r in enumerate(radii):
        r = float(r)
        w = gauge_sphere_points(g, x, r, n_sphere, rng)
        L = float(np.max(g.distance(np.broadcast_to(fx, (n_sphere, g.total_dim)), f(w))))
        img_vol = _image_ball_volume(g, f, x, lam * r, n_vol, rng)
        top = L**p * r ** (nu - p) / img_vol
        if p == q:
            bottom = 1.0
        else:
            lo, hi = g.ball_bounding_box(x, lam * r)
            ball_box = Box(tuple(lo), tuple(hi))
            ball_pred = lambda pts: g.distance(
                np.broadcast_to(x, np.shape(pts)), pts
            ) <= lam * r
            if set_function is not None:
                phi = set_function(ball_box, ball_pred)
            else:
                K = distortion_coefficient(
                    g, f, ball_box, p, q, resolution, mask_pred=ball_pred
                ).coefficient
                phi = K ** (p * q / (p - q))
            ball_vol = vol_unit * r**nu
            bottom = (phi / ball_vol) ** ((p - q) / q)
        quotients[i] = top / bottom
    return {
        "radii": radii,
        "quotients": quotients,
        "limsup_est": float(np.max(_smallest_quartile(quotients))),
    }


def radial_bound_sequence(
    g: GroupDescriptor,
    f: MapSpec,
    x,
    p: float,
    q: float,
    lam: float,
    radii,
    resolution: int = 16,
    n_sphere: int = 512,
    n_vol: int = 40_000,
    rng: np.random.Generator | None = None,
) -> dict:
    """Boundedness sequence L(x,r) r^((nu-q)/q) / (|f(B(x,lam r))|^(1/p)
    K_{p,q}(f; B(x,lam r))); finite and stable max is the check."""
    if lam <= 1:
        raise ValueError("lam must exceed 1")
    radii = _check_radii(radii)
    if rng is None:
        rng = np.random.default_rng(0)
    x = g.validate_point(np.asarray(x, dtype=float))
    nu = g.hom_dim
    fx = f(x[None])[0]
    vals = np.empty(len(radii))
    for i, r in enumerate(radii):
        r = float(r)
        w = gauge_sphere_points(g, x, r, n_sphere, rng)
        L = float(np.max(g.distance(np.broadcast_to(fx, (n_sphere, g.total_dim)), f(w))))
        img_vol = _image_ball_volume(g, f, x, lam * r, n_vol, rng)
        lo, hi = g.ball_bounding_box(x, lam * r)
        ball_box = Box(tuple(lo), tuple(hi))
        ball_pred = lambda pts: g.distance(
            np.broadcast_to(x, np.shape(pts)), pts
        ) <= lam * r
        K = distortion_coefficient(
            g, f, ball_box, p, q, resolution, mask_pred=ball_pred
        ).coefficient
        vals[i] = L * r ** ((nu - q) / q) / (img_vol ** (1.0 / p) * K)
    return {
        "radii": radii,
        "values": vals,
        "max": float(np.max(vals)),
        "quartile_max": float(np.max(_smallest_quartile(vals))),
    }
