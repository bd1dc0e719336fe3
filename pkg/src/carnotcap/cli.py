"""Command-line runner: one task per invocation, one delimited report per run.

Subcommands: capacity, distort, cov, push, verify, zoo, liouville. Settings
merge from a config file (--config), CARNOTCAP_* environment variables, and
flags, in that order of increasing precedence. Exit codes: 0 success (all
checks passed), 1 at least one verification failed, 2 invalid configuration
or parameters, 3 solver or discretization failure. Figures are rendered next
to the report only when plots are enabled; the CSV is the contract.
"""

from __future__ import annotations

import argparse
import os
import re
import sys

import numpy as np

from .capacity import (
    DiscretizationError,
    annulus_condenser,
    gauge_ring_condenser,
    ring_capacity_oracle,
    solve_capacity,
)
from .config import (
    TASKS,
    ConfigError,
    ExperimentConfig,
    env_overrides,
    load_config,
    merge_config,
)
from .grid import Box, sample_on_grid
from .groups import abelian, heisenberg
from .maps import change_of_variables_check, distortion_coefficient
from .pushforward import (
    Exponents,
    liouville_decay,
    verify_capacity_inequality,
    verify_composition_norm,
    verify_image_capacity_bound,
    verify_multiplicity_capacity_bound,
    verify_pushforward_norm,
)
from .reporting import REPORT_FIELDS, format_float, write_reports_csv, write_rows_csv
from .zoo import (
    group_from_name,
    linear_distortion_estimate,
    zoo_anisotropic,
    zoo_dilation,
    zoo_from_name,
    zoo_identity,
    zoo_linear,
    zoo_table,
    zoo_winding,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument("--out", help="report CSV path")
    common.add_argument("--seed", type=int, help="RNG seed (default 0)")
    common.add_argument("--resolution", type=int, help="grid cells per axis")
    common.add_argument("--slack", type=float, help="relative slack for checks")
    common.add_argument(
        "--plots", action="store_true", help="render PNG figures beside the CSV"
    )
    common.add_argument("--group", help="group name: R2, R3, H1, ...")
    common.add_argument("--map", dest="map_name", help="zoo map, e.g. winding(k=2)")
    common.add_argument("--p", type=float, help="outer exponent p")
    common.add_argument("--q", type=float, help="inner exponent q")
    common.add_argument(
        "--set",
        dest="sets",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="extra dotted config assignment, repeatable",
    )
    ap = argparse.ArgumentParser(
        prog="carnotcap",
        parents=[common],
        description="capacity and distortion checks on Carnot groups",
    )
    sub = ap.add_subparsers(dest="subtask")
    helps = {
        "capacity": "solve one gauge-ring condenser capacity",
        "distort": "distortion coefficient K_pq over a box",
        "cov": "Monte Carlo change-of-variables identity check",
        "push": "push-forward and composition norm bounds",
        "verify": "run the capacity-inequality fixture suite",
        "zoo": "list the analytic mapping zoo",
        "liouville": "capacity decay toward infinity (rigidity mechanism)",
    }
    for name in TASKS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return ap


def _resolve_mapping(args) -> dict[str, str]:
    layers = []
    if args.config:
        layers.append(load_config(args.config))
    layers.append(env_overrides(os.environ))
    flags: dict[str, str] = {}
    task = args.subtask or None
    if task:
        flags["task"] = task
    else:
        task = merge_config(*layers).get("task")
    for key in ("out", "seed", "resolution", "slack"):
        val = getattr(args, key)
        if val is not None:
            flags[key] = str(val)
    if args.plots:
        flags["plots"] = "true"
    for flag, sub in (("group", "group"), ("map_name", "map"), ("p", "p"), ("q", "q")):
        val = getattr(args, flag)
        if val is not None:
            if not task:
                raise ConfigError(f"--{sub} given but no task selected")
            flags[f"{task}.{sub}"] = str(val)
    for item in args.sets:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        flags[key.strip()] = value.strip()
    layers.append(flags)
    return merge_config(*layers)


def _stem(out: str) -> str:
    return os.path.splitext(out)[0]


def _entry(cfg: ExperimentConfig, default_map: str, default_group: str):
    g = group_from_name(cfg.param_str("group", default_group))
    entry = zoo_from_name(cfg.param_str("map", default_map), g)
    return entry.group, entry


# -- tasks -------------------------------------------------------------------


def _task_capacity(cfg: ExperimentConfig):
    g = group_from_name(cfg.param_str("group", "R2"))
    p = cfg.param_float("p", 2.0)
    r = cfg.param_float("r0", 1.0)
    R = cfg.param_float("r1", 2.0)
    result = solve_capacity(g, gauge_ring_condenser(g, r, R), p, cfg.resolution)
    row = {
        "group": g.short_name,
        "p": format_float(p),
        "r0": format_float(r),
        "r1": format_float(R),
        "resolution": max(result.resolution),
        "value": format_float(result.value),
        "converged": int(result.converged),
        "iterations": result.iterations,
        "grad_residual": format_float(result.grad_residual),
        "oracle": "",
        "rel_err": "",
    }
    if g.kind == "abelian":
        oracle = ring_capacity_oracle(g.rank, p, r, R)
        row["oracle"] = format_float(oracle)
        row["rel_err"] = format_float((result.value - oracle) / oracle)
    write_rows_csv(cfg.out, "capacity", list(row.keys()), [row])
    if cfg.plots:
        from .plots import render_grid_slice

        render_grid_slice(
            result.minimizer, _stem(cfg.out) + "_minimizer.png", "capacity minimizer"
        )
    if not result.converged:
        return 3, "solver did not converge"
    return 0, f"wrote {cfg.out} value={format_float(result.value)}"


def _task_distort(cfg: ExperimentConfig):
    g, entry = _entry(cfg, "winding(k=2)", "R2")
    p = cfg.param_float("p", 2.0)
    q = cfg.param_float("q", 2.0)
    box_r = cfg.param_float("box_r", 1.5)
    hole_r = cfg.param_float("hole_r", 0.0)
    lo, hi = g.ball_bounding_box(g.identity(), box_r)
    box = Box(tuple(lo), tuple(hi))

    def mask(pts):
        d = g.distance(np.broadcast_to(g.identity(), np.shape(pts)), pts)
        return (d <= box_r) & (d > hole_r)

    rep = distortion_coefficient(g, entry.spec, box, p, q, cfg.resolution, mask_pred=mask)
    rows = [
        {
            "kind": "K_pq",
            "map": entry.name,
            "group": g.short_name,
            "p": format_float(p),
            "q": format_float(q),
            "value": format_float(rep.coefficient),
            "detail": f"kappa={format_float(rep.kappa)};cells={rep.diagnostics['cells']};"
            f"field_max={format_float(rep.diagnostics['field_max'])}",
        }
    ]
    if "x" in cfg.params:
        x = np.array([float(v) for v in cfg.params["x"].split(":")])
        radii = np.geomspace(box_r / 30.0, box_r / 3000.0, 12)
        est = linear_distortion_estimate(
            g, entry.spec, x, radii, rng=np.random.default_rng(cfg.seed)
        )
        rows.append(
            {
                "kind": "H_estimate",
                "map": entry.name,
                "group": g.short_name,
                "p": format_float(p),
                "q": format_float(q),
                "value": format_float(est["H"]),
                "detail": f"x={cfg.params['x']};radii={len(radii)}",
            }
        )
    write_rows_csv(cfg.out, "distort", list(rows[0].keys()), rows)
    if cfg.plots:
        from .plots import render_grid_slice

        render_grid_slice(rep.field, _stem(cfg.out) + "_field.png", "pointwise K_p")
    return 0, f"wrote {cfg.out} K={format_float(rep.coefficient)}"


def _task_cov(cfg: ExperimentConfig):
    g, entry = _entry(cfg, "winding(k=2)", "R2")
    box_r = cfg.param_float("box_r", 1.5)
    n = cfg.param_int("n", 200_000)
    tol = cfg.param_float("tol", 0.02)
    lo, hi = g.ball_bounding_box(g.identity(), box_r)
    box = Box(tuple(lo), tuple(hi))

    def a_pred(pts):
        return g.distance(np.broadcast_to(g.identity(), np.shape(pts)), pts) <= box_r

    def u_fn(ys):
        return np.exp(-np.sum(ys * ys, axis=-1))

    report = change_of_variables_check(
        g, entry.spec, box, a_pred, u_fn, n_samples=n,
        rng=np.random.default_rng(cfg.seed), tol=tol,
    )
    write_reports_csv(cfg.out, "cov", [report])
    if cfg.plots:
        from .plots import render_ratios

        render_ratios([report], _stem(cfg.out) + "_ratios.png")
    ok = report.passed
    return (0 if ok else 1), (
        f"wrote {cfg.out} passed={int(ok)}" if ok else "change-of-variables check failed"
    )


def _radial_bump(g, r0: float, r1: float):
    def u(pts):
        d = g.gauge_norm(pts)
        z = 4.0 * (d - r0) * (r1 - d) / (r1 - r0) ** 2
        return np.where((d > r0) & (d < r1), z, 0.0)

    return u


def _task_push(cfg: ExperimentConfig):
    g, entry = _entry(cfg, "winding(k=2)", "R2")
    p = cfg.param_float("p", 2.0)
    q = cfg.param_float("q", 2.0)
    lam = cfg.param_float("lam", 1.0)
    r0 = cfg.param_float("r0", 0.4)
    r1 = cfg.param_float("r1", 1.5)
    box_r = cfg.param_float("box_r", 2.1)
    lo, hi = g.ball_bounding_box(g.identity(), box_r)
    box = Box(tuple(lo), tuple(hi))
    bump = _radial_bump(g, r0, r1)
    u = sample_on_grid(box, cfg.resolution, bump)
    reports = [
        verify_pushforward_norm(entry.spec, u, p, q, lam=lam, slack=cfg.slack)
    ]
    ibox = entry.spec.image_box(box)
    u_img = sample_on_grid(ibox, cfg.resolution, bump)
    reports.append(
        verify_composition_norm(entry.spec, u_img, box, p, q, slack=cfg.slack)
    )
    write_reports_csv(cfg.out, "push", reports)
    if cfg.plots:
        from .plots import render_ratios

        render_ratios(reports, _stem(cfg.out) + "_ratios.png")
    failed = [r.check for r in reports if not r.passed]
    if failed:
        return 1, "failed: " + ",".join(failed)
    return 0, f"wrote {cfg.out} passed={len(reports)}/{len(reports)}"


_FIXTURE_IDS = (
    "r2_identity",
    "r2_diag21",
    "r2_winding2",
    "r2_winding3",
    "h1_dilation2",
    "h1_aniso21",
)


def _fixture(fid: str):
    """id -> (entry, condenser, p, q)."""
    if fid == "r2_identity":
        g = abelian(2)
        return zoo_identity(g), gauge_ring_condenser(g, 0.5, 1.0), 2.0, 2.0
    if fid == "r2_diag21":
        g = abelian(2)
        entry = zoo_linear(g, [[2.0, 0.0], [0.0, 1.0]])
        return entry, gauge_ring_condenser(g, 0.5, 1.0), 3.0, 2.0
    if fid == "r2_winding2":
        return zoo_winding(2), annulus_condenser(0.25, 0.5, 0.75, 1.5), 2.0, 2.0
    if fid == "r2_winding3":
        return zoo_winding(3), annulus_condenser(0.25, 0.5, 0.75, 1.5), 3.0, 2.0
    if fid == "h1_dilation2":
        g = heisenberg(1)
        return zoo_dilation(g, 2.0), gauge_ring_condenser(g, 0.5, 1.0), 4.0, 4.0
    if fid == "h1_aniso21":
        g = heisenberg(1)
        return zoo_anisotropic(2.0, 1.0), gauge_ring_condenser(g, 0.5, 1.0), 4.0, 3.5
    raise ConfigError(f"unknown fixture {fid!r} (known: {', '.join(_FIXTURE_IDS)})")


def fixture_reports(fid: str, resolution, slack: float, cache: dict | None = None):
    """All inequality checks for one suite fixture."""
    entry, cond, p, q = _fixture(fid)
    f = entry.spec
    nu = f.source.hom_dim
    reports = [
        verify_capacity_inequality(f, cond, p, q, resolution, slack=slack, cache=cache)
    ]
    if q > nu - 1:
        exps = Exponents(p, q, nu)
        reports.append(
            verify_image_capacity_bound(f, cond, exps, resolution, slack=slack, cache=cache)
        )
        reports.append(
            verify_multiplicity_capacity_bound(
                f, cond, exps, resolution, slack=slack, cache=cache
            )
        )
    return reports


def _parse_geometry(text: str, g):
    """ring(r:R) gauge ring, annulus(hole:plo:phi:R) planar annulus,
    bump(r0:r1:box_r) radial test function support for the norm checks."""
    m = re.fullmatch(r"(\w+)\(([^)]*)\)", text.strip())
    if not m:
        raise ConfigError(f"bad geometry {text!r}")
    kind, nums = m.group(1), [float(v) for v in m.group(2).split(":") if v]
    if kind == "ring" and len(nums) == 2:
        return "condenser", gauge_ring_condenser(g, nums[0], nums[1])
    if kind == "annulus" and len(nums) == 4:
        return "condenser", annulus_condenser(*nums)
    if kind == "bump" and len(nums) == 3:
        return "bump", tuple(nums)
    raise ConfigError(f"bad geometry {text!r}")


def _run_manifest_item(item: dict, cache: dict):
    g = group_from_name(item["group"])
    entry = zoo_from_name(item["map"], g)
    f = entry.spec
    check = item["check"]
    p, q = float(item["p"]), float(item["q"])
    res = int(item["resolution"])
    slack = float(item["slack"])
    kind, geom = _parse_geometry(item["geometry"], f.source)
    if check in ("capacity_inequality", "image_capacity_bound", "multiplicity_capacity_bound"):
        if kind != "condenser":
            raise ConfigError(f"{check} needs a ring/annulus geometry")
        if check == "capacity_inequality":
            return verify_capacity_inequality(f, geom, p, q, res, slack=slack, cache=cache)
        exps = Exponents(p, q, f.source.hom_dim)
        if check == "image_capacity_bound":
            return verify_image_capacity_bound(f, geom, exps, res, slack=slack, cache=cache)
        return verify_multiplicity_capacity_bound(f, geom, exps, res, slack=slack, cache=cache)
    if check in ("pushforward_norm", "composition_norm"):
        if kind != "bump":
            raise ConfigError(f"{check} needs a bump geometry")
        r0, r1, box_r = geom
        lo, hi = f.source.ball_bounding_box(f.source.identity(), box_r)
        box = Box(tuple(lo), tuple(hi))
        bump = _radial_bump(f.source, r0, r1)
        if check == "pushforward_norm":
            u = sample_on_grid(box, res, bump)
            return verify_pushforward_norm(f, u, p, q, slack=slack)
        u_img = sample_on_grid(f.image_box(box), res, _radial_bump(f.target, r0, r1))
        return verify_composition_norm(f, u_img, box, p, q, slack=slack, resolution=res)
    raise ConfigError(f"unknown manifest check {check!r}")


_MANIFEST_FIELDS = ("check", "group", "map", "geometry", "p", "q", "resolution", "slack")


def parse_manifest(text: str) -> list[dict]:
    """Suite manifest: one comma-separated line per check, fields
    check, group, map, geometry, p, q, resolution, slack."""
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [v.strip() for v in line.split(",")]
        if len(parts) != len(_MANIFEST_FIELDS):
            raise ConfigError(
                f"manifest line {lineno}: expected {len(_MANIFEST_FIELDS)} fields "
                f"({', '.join(_MANIFEST_FIELDS)})"
            )
        items.append(dict(zip(_MANIFEST_FIELDS, parts)))
    if not items:
        raise ConfigError("manifest lists no checks")
    return items


def _task_verify(cfg: ExperimentConfig):
    reports = []
    cache: dict = {}
    if "manifest" in cfg.params:
        try:
            with open(cfg.params["manifest"]) as fh:
                items = parse_manifest(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read manifest: {exc}") from exc
        for item in items:
            reports.append(_run_manifest_item(item, cache))
    else:
        raw = cfg.param_str("fixtures", ":".join(_FIXTURE_IDS))
        fids = [v for v in raw.split(":") if v]
        for fid in fids:
            reports.extend(fixture_reports(fid, cfg.resolution, cfg.slack, cache=cache))
    write_reports_csv(cfg.out, "verify", reports)
    if cfg.plots:
        from .plots import render_ratios

        render_ratios(reports, _stem(cfg.out) + "_ratios.png")
    for r in sorted(reports, key=lambda r: (r.check, r.digest())):
        status = "pass" if r.passed else "FAIL"
        print(f"{status} {r.check} {r.inputs.get('map','')} ratio={r.ratio:.4g}")
    failed = sum(not r.passed for r in reports)
    if failed:
        return 1, f"{failed}/{len(reports)} checks failed"
    return 0, f"wrote {cfg.out} passed={len(reports)}/{len(reports)}"


def _task_zoo(cfg: ExperimentConfig):
    pattern = cfg.param_str("filter", "")
    rows = []
    for e in zoo_table():
        if pattern and pattern not in e.name:
            continue
        rows.append(
            {
                "name": e.name,
                "group": e.group.short_name,
                "k_formula": e.kp_formula,
                "multiplicity": e.multiplicity,
                "branch": e.branch_desc,
                "admissible": e.admissible_desc,
                "notes": e.notes,
            }
        )
    if not rows:
        raise ConfigError(f"zoo filter {pattern!r} matches no entry")
    write_rows_csv(cfg.out, "zoo", list(rows[0].keys()), rows)
    width = max(len(r["name"]) for r in rows)
    for r in rows:
        print(f"{r['name']:<{width}}  {r['group']:<3} {r['k_formula']}")
    return 0, f"wrote {cfg.out} entries={len(rows)}"


def _task_liouville(cfg: ExperimentConfig):
    g, entry = _entry(cfg, "identity", "R2")
    p = cfg.param_float("p", 1.5)
    q = cfg.param_float("q", 1.5)
    core_r = cfg.param_float("core_r", 0.5)
    radii = cfg.param_floats("radii", (1.0, 2.0, 4.0, 8.0, 16.0, 32.0))
    target = cfg.param_float("decay_target", 0.1)
    out = liouville_decay(
        g, entry.spec, p, q, core_r=core_r, outer_radii=radii,
        resolution=cfg.resolution, decay_target=target, slack=cfg.slack,
    )
    write_reports_csv(cfg.out, "liouville", [out["report"]])
    rows = [
        {k: (format_float(v) if isinstance(v, float) else v) for k, v in row.items()}
        for row in out["rows"]
    ]
    decay_path = _stem(cfg.out) + "_decay.csv"
    write_rows_csv(decay_path, "liouville", list(rows[0].keys()), rows)
    if cfg.plots:
        from .plots import render_decay

        render_decay(out["radii"], out["capacities"], _stem(cfg.out) + "_decay.png")
    if not all(r["converged"] for r in out["rows"]):
        return 3, "a capacity solve did not converge"
    rep = out["report"]
    if not rep.passed:
        return 1, f"decay ratio {format_float(rep.lhs)} above target {format_float(rep.rhs)}"
    return 0, f"wrote {cfg.out} decay_ratio={format_float(rep.lhs)}"


_RUNNERS = {
    "capacity": _task_capacity,
    "distort": _task_distort,
    "cov": _task_cov,
    "push": _task_push,
    "verify": _task_verify,
    "zoo": _task_zoo,
    "liouville": _task_liouville,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.from_mapping(_resolve_mapping(args))
    except ConfigError as exc:
        print(f"carnotcap: exit=2 reason=config: {exc}", file=sys.stderr)
        return 2
    try:
        code, message = _RUNNERS[cfg.task](cfg)
    except ConfigError as exc:
        print(f"carnotcap: exit=2 reason=config: {exc}", file=sys.stderr)
        return 2
    except DiscretizationError as exc:
        print(f"carnotcap: exit=3 reason=discretization: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"carnotcap: exit=2 reason=invalid-parameters: {exc}", file=sys.stderr)
        return 2
    if code == 0:
        print(message)
    else:
        print(f"carnotcap: exit={code} reason={message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
