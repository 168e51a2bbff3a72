"""Command-line front door: plan designs, run sweeps, emit error tables and
plot-ready surfaces, run simulations.

Exit codes: 0 success, 2 invalid input, 3 infeasible plan.  Machine-readable
output goes to stdout or ``--out``; existing files are only overwritten with
``--force``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .errors import InfeasibleDesignError, ResourceLimitError
from .model import EXACT, MixturePoint, StrongEffectRegion
from .multicenter import (
    MulticenterDesign,
    StepUpProcedure,
    beta_fw_bound_table,
    beta_fw_table,
    per_center_targets,
    plan_multicenter,
    plan_multicenter_one_stage,
)
from .one_stage import OneStageDesign, approximate_sample_size, plan_one_stage
from .simulate import SimulationConfig, empirical_beta_fw
from .two_stage import (
    TwoStageDesign,
    beta2,
    expected_n_alt_max,
    expected_n_null,
    feasibility,
    make_design,
    plan_two_stage,
    second_stage_probability,
    sweep,
    sweep_to_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as e:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from e


def _parse_grid(text: str, integer: bool = False) -> list:
    """start:stop:step with inclusive endpoints."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"bad grid {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    vals = [start + i * step for i in range(n)]
    if integer:
        out = [int(round(v)) for v in vals]
        if any(abs(v - o) > 1e-9 for v, o in zip(vals, out)):
            raise ValueError(f"grid {text!r} must contain integers")
        return out
    return [round(v, 10) for v in vals]


def _region_from_args(args) -> StrongEffectRegion:
    if args.region:
        with open(args.region) as f:
            return StrongEffectRegion.from_json(f.read())
    if args.mu is None or args.p is None:
        raise ValueError("supply either --region FILE or both --mu and --p")
    return StrongEffectRegion.from_vectors(_parse_floats(args.mu), _parse_floats(args.p))


def _emit(text: str, out: Optional[str], force: bool) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    if os.path.exists(out) and not force:
        raise ValueError(f"refusing to overwrite {out} without --force")
    with open(out, "w") as f:
        f.write(text)


def _add_common(p: argparse.ArgumentParser, region: bool = True) -> None:
    if region:
        p.add_argument("--mu", help="comma-separated corner effects, e.g. 2,1,0.7")
        p.add_argument("--p", help="comma-separated corner prevalences, e.g. 0.2,0.4,0.6")
        p.add_argument("--region", help="region JSON file (alternative to --mu/--p)")
    p.add_argument("--out", help="write output to this file instead of stdout")
    p.add_argument("--force", action="store_true", help="overwrite an existing --out file")


def _load_two_stage(path: str) -> TwoStageDesign:
    with open(path) as f:
        return TwoStageDesign.from_json(f.read())


def _cmd_plan_one_stage(args) -> int:
    region = _region_from_args(args)
    d = plan_one_stage(region, args.alpha, args.beta_max, args.mode)
    payload = {
        "n": d.n,
        "alpha": d.alpha,
        "eta": d.eta,
        "approximate_n": approximate_sample_size(region, args.alpha, args.beta_max),
    }
    _emit(json.dumps(payload, indent=2), args.out, args.force)
    return EXIT_OK


def _cmd_plan_two_stage(args) -> int:
    region = _region_from_args(args)
    d = plan_two_stage(region, args.alpha, args.beta_max, args.n1, args.alpha0, mode=args.mode)
    diag = expected_n_alt_max(d)
    payload = json.loads(d.to_json())
    payload.update(
        {
            "q0": expected_n_null(d),
            "q1": diag.q1,
            "total": d.n1 + d.n2,
            "worst_point": {"mu": diag.worst_point.mu, "p": diag.worst_point.p},
        }
    )
    _emit(json.dumps(payload, indent=2), args.out, args.force)
    return EXIT_OK


def _cmd_plan_multicenter(args) -> int:
    region = _region_from_args(args)
    mc = plan_multicenter(
        args.centers, region, args.alpha, args.beta_max, args.n1, args.alpha0,
        procedure_kind=args.procedure,
    )
    one = plan_multicenter_one_stage(
        args.centers, region, args.alpha, args.beta_max, procedure_kind=args.procedure
    )
    d = mc.center_design
    diag = expected_n_alt_max(d)
    alpha_m, beta_m = per_center_targets(args.centers, args.alpha, args.beta_max, args.procedure)
    payload = json.loads(mc.to_json())
    payload.update(
        {
            "per_center_alpha": alpha_m,
            "per_center_beta": beta_m,
            "one_stage_n": one.n,
            "q0": expected_n_null(d),
            "q1": diag.q1,
            "total": d.n1 + d.n2,
        }
    )
    _emit(json.dumps(payload, indent=2), args.out, args.force)
    return EXIT_OK


def _cmd_feasible(args) -> int:
    region = _region_from_args(args)
    n = args.n or plan_one_stage(region, args.alpha, args.beta_max).n
    feas = feasibility(region, args.alpha, args.beta_max, n)
    n1s = list(range(feas.n1_min, feas.n1_max + 1))
    payload = {
        "n1_min": feas.n1_min,
        "n1_max": feas.n1_max,
        "alpha0_upper": [[n1, feas.alpha0_upper(n1)] for n1 in n1s],
    }
    _emit(json.dumps(payload, indent=2), args.out, args.force)
    return EXIT_OK


def _targets_from_args(args, region) -> tuple[float, float]:
    if args.centers:
        return per_center_targets(args.centers, args.alpha, args.beta_max, args.procedure)
    return args.alpha, args.beta_max


def _cmd_sweep(args) -> int:
    region = _region_from_args(args)
    alpha, beta_max = _targets_from_args(args, region)
    n1_grid = _parse_grid(args.grid_n1, integer=True)
    alpha0_grid = _parse_grid(args.grid_alpha0)
    rows = sweep(region, alpha, beta_max, n1_grid, alpha0_grid, mode=args.mode)
    _emit(sweep_to_csv(rows), args.out, args.force)
    return EXIT_OK


_SVG_STOPS = [(0.267, 0.005, 0.329), (0.128, 0.567, 0.551), (0.993, 0.906, 0.144)]


def _viridis(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        a, b, u = _SVG_STOPS[0], _SVG_STOPS[1], t * 2
    else:
        a, b, u = _SVG_STOPS[1], _SVG_STOPS[2], t * 2 - 1
    rgb = [int(255 * (x + (y - x) * u)) for x, y in zip(a, b)]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def _heatmap_svg(mu_grid, p_grid, values: np.ndarray, title: str) -> str:
    w, h, m = 640, 480, 50
    cw = (w - 2 * m) / len(mu_grid)
    ch = (h - 2 * m) / len(p_grid)
    lo, hi = float(np.nanmin(values)), float(np.nanmax(values))
    rng = hi - lo if hi > lo else 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
        f'<title>{title}</title>',
        f'<text x="{w/2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for i, mu in enumerate(mu_grid):
        for j, p in enumerate(p_grid):
            t = (values[i, j] - lo) / rng
            x = m + i * cw
            y = h - m - (j + 1) * ch
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw + 0.5:.1f}" '
                f'height="{ch + 0.5:.1f}" fill="{_viridis(t)}"/>'
            )
    parts.append(
        f'<text x="{w/2}" y="{h-12}" text-anchor="middle" font-size="12">mu '
        f'({mu_grid[0]:g}..{mu_grid[-1]:g})</text>'
    )
    parts.append(
        f'<text x="14" y="{h/2}" font-size="12" transform="rotate(-90 14 {h/2})" '
        f'text-anchor="middle">p ({p_grid[0]:g}..{p_grid[-1]:g})</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _cmd_surface(args) -> int:
    d = _load_two_stage(args.design)
    mu_grid = _parse_grid(args.grid_mu)
    p_grid = _parse_grid(args.grid_p)
    alpha = args.alpha if args.alpha is not None else d.alpha
    values = np.empty((len(mu_grid), len(p_grid)))
    for i, mu in enumerate(mu_grid):
        for j, p in enumerate(p_grid):
            pt = MixturePoint(float(mu), float(p))
            if args.kind == "false-negative":
                values[i, j] = beta2(d, alpha, pt, args.mode)
            else:
                values[i, j] = second_stage_probability(d, pt, args.mode)
    lines = ["mu,p,value"]
    for i, mu in enumerate(mu_grid):
        for j, p in enumerate(p_grid):
            lines.append(f"{mu:.6f},{p:.6f},{values[i, j]:.6f}")
    _emit("\n".join(lines) + "\n", args.out, args.force)
    if args.svg:
        svg = _heatmap_svg(mu_grid, p_grid, values, args.kind)
        if os.path.exists(args.svg) and not args.force:
            raise ValueError(f"refusing to overwrite {args.svg} without --force")
        with open(args.svg, "w") as f:
            f.write(svg)
    return EXIT_OK


def _multicenter_from_args(args) -> MulticenterDesign:
    center = _load_two_stage(args.design)
    proc = StepUpProcedure.of_kind(args.procedure, args.centers, args.alpha)
    _, beta_m = per_center_targets(args.centers, args.alpha, args.beta_max, args.procedure)
    return MulticenterDesign(procedure=proc, center_design=center, beta_M_se=beta_m)


def _cmd_beta_table(args) -> int:
    mc = _multicenter_from_args(args)
    if args.kind == "bound":
        region = _region_from_args(args)
        table = beta_fw_bound_table(mc, region, mode=args.mode)
    else:
        if args.mu_star is None or args.p_star is None:
            raise ValueError("exact tables need --mu-star and --p-star")
        table = beta_fw_table(mc, MixturePoint(args.mu_star, args.p_star), mode=args.mode)
    _emit(table.to_csv(), args.out, args.force)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    mc = _multicenter_from_args(args)
    config = SimulationConfig(
        n_centers=args.centers,
        n_strong=args.strong,
        strong_point=MixturePoint(args.mu_star, args.p_star),
        delta=args.delta,
        replications=args.reps,
        seed=args.seed,
    )
    table = empirical_beta_fw(config, mc)
    _emit(table.to_csv(), args.out, args.force)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mixtrial",
        description="Plan mixture-response RCT designs with guaranteed error rates.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan-one-stage", help="minimal one-stage sample size")
    _add_common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--mode", choices=["exact", "approximate"], default="exact")
    p.set_defaults(func=_cmd_plan_one_stage)

    p = sub.add_parser("plan-two-stage", help="two-stage plan at a chosen (n1, alpha0)")
    _add_common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--alpha0", type=float, required=True)
    p.add_argument("--mode", choices=["exact", "approximate"], default="approximate")
    p.set_defaults(func=_cmd_plan_two_stage)

    p = sub.add_parser("plan-multicenter", help="per-center two-stage plan for M centers")
    _add_common(p)
    p.add_argument("--centers", type=int, required=True)
    p.add_argument("--procedure", default="hochberg",
                   choices=["hochberg", "benjamini_hochberg", "bonferroni"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--alpha0", type=float, required=True)
    p.set_defaults(func=_cmd_plan_multicenter)

    p = sub.add_parser("feasible", help="feasible (n1, alpha0) bounds")
    _add_common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--n", type=int, help="one-stage n (computed when omitted)")
    p.set_defaults(func=_cmd_feasible)

    p = sub.add_parser("sweep", help="plan every cell of an (n1, alpha0) grid")
    _add_common(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--grid-n1", required=True, help="start:stop:step (integers)")
    p.add_argument("--grid-alpha0", required=True, help="start:stop:step")
    p.add_argument("--centers", type=int,
                   help="derive per-center targets for this many centers")
    p.add_argument("--procedure", default="hochberg",
                   choices=["hochberg", "benjamini_hochberg", "bonferroni"])
    p.add_argument("--mode", choices=["exact", "approximate"], default="approximate")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("surface", help="beta2 or stage-2-probability surface CSV")
    _add_common(p, region=False)
    p.add_argument("--kind", choices=["false-negative", "second-stage-prob"], required=True)
    p.add_argument("--design", required=True, help="two-stage design JSON file")
    p.add_argument("--alpha", type=float, help="evaluation level (default: design alpha)")
    p.add_argument("--grid-mu", required=True, help="start:stop:step")
    p.add_argument("--grid-p", required=True, help="start:stop:step")
    p.add_argument("--mode", choices=["exact", "approximate"], default="exact")
    p.add_argument("--svg", help="also write an SVG heatmap here")
    p.set_defaults(func=_cmd_surface)

    p = sub.add_parser("beta-table", help="family-wise type II error table")
    _add_common(p)
    p.add_argument("--design", required=True, help="center two-stage design JSON")
    p.add_argument("--centers", type=int, required=True)
    p.add_argument("--procedure", default="hochberg",
                   choices=["hochberg", "benjamini_hochberg", "bonferroni"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-max", type=float, default=0.2)
    p.add_argument("--kind", choices=["exact", "bound"], default="exact")
    p.add_argument("--mu-star", type=float)
    p.add_argument("--p-star", type=float)
    p.add_argument("--mode", choices=["exact", "approximate"], default="exact")
    p.set_defaults(func=_cmd_beta_table)

    p = sub.add_parser("simulate", help="Monte Carlo family-wise error frequencies")
    _add_common(p, region=False)
    p.add_argument("--design", required=True, help="center two-stage design JSON")
    p.add_argument("--centers", type=int, required=True)
    p.add_argument("--strong", type=int, required=True, help="centers with the strong effect")
    p.add_argument("--procedure", default="hochberg",
                   choices=["hochberg", "benjamini_hochberg", "bonferroni"])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-max", type=float, default=0.2)
    p.add_argument("--mu-star", type=float, required=True)
    p.add_argument("--p-star", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_simulate)

    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_VALIDATION if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceLimitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except InfeasibleDesignError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
