"""Stateless HTTP JSON facade over the planning, table, and simulation
operations.

Every response is a pure function of the request body and wraps its payload
as ``{"ok": true, "result": ...}`` or ``{"ok": false, "error": {code,
message}}`` with codes validation (400), infeasible (422), resource (422)
and internal (500).  Long sweeps run synchronously under a configurable
time budget (PLANNER_TIMEOUT, default 120 s); the listen port comes from
PLANNER_PORT (default 8080).
"""
from __future__ import annotations

import json
import math
import os
from typing import Any, Callable

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import InfeasibleDesignError, ResourceLimitError
from .model import MixturePoint, StrongEffectRegion
from .multicenter import (
    MulticenterDesign,
    StepUpProcedure,
    beta_fw_bound_table,
    beta_fw_table,
    per_center_targets,
    plan_multicenter,
    plan_multicenter_one_stage,
)
from .one_stage import approximate_sample_size, plan_one_stage
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
)

DEFAULT_PORT = 8080
DEFAULT_TIMEOUT = 120.0


def _region(body: dict) -> StrongEffectRegion:
    reg = body.get("region")
    if not isinstance(reg, dict) or "mu" not in reg or "p" not in reg:
        raise ValueError('body needs "region": {"mu": [...], "p": [...]}')
    return StrongEffectRegion.from_vectors(reg["mu"], reg["p"])


def _require(body: dict, *names: str) -> list:
    missing = [n for n in names if n not in body]
    if missing:
        raise ValueError(f"missing required fields: {', '.join(missing)}")
    return [body[n] for n in names]


def _grid(spec: Any, integer: bool = False) -> list:
    if isinstance(spec, list):
        return [int(v) if integer else float(v) for v in spec]
    if isinstance(spec, dict):
        start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + i * step for i in range(n)]
        return [int(round(v)) for v in vals] if integer else [round(v, 10) for v in vals]
    raise ValueError("grid must be a list or {start, stop, step}")


def _two_stage(body: dict, key: str = "design") -> TwoStageDesign:
    d = body.get(key)
    if not isinstance(d, dict):
        raise ValueError(f'body needs "{key}" with the two-stage design fields')
    return TwoStageDesign.from_json(json.dumps(d))


def _design_payload(d: TwoStageDesign) -> dict:
    diag = expected_n_alt_max(d)
    out = json.loads(d.to_json())
    out.update(
        {
            "q0": expected_n_null(d),
            "q1": diag.q1,
            "total": d.n1 + d.n2,
            "worst_point": {"mu": diag.worst_point.mu, "p": diag.worst_point.p},
        }
    )
    return out


def _table_payload(table) -> dict:
    out = {
        "kind": table.kind,
        "n_centers": table.n_centers,
        "cells": [
            {"M1": m1, "m": m, "value": v} for (m1, m), v in sorted(table.entries.items())
        ],
    }
    if table.replications is not None:
        out.update(
            {"replications": table.replications, "seed": table.seed, "delta": table.delta}
        )
    return out


def _mc_from_body(body: dict) -> MulticenterDesign:
    centers, procedure, alpha = _require(body, "centers", "procedure", "alpha")
    beta_max = float(body.get("beta_max", 0.2))
    center = _two_stage(body)
    proc = StepUpProcedure.of_kind(str(procedure), int(centers), float(alpha))
    _, beta_m = per_center_targets(int(centers), float(alpha), beta_max, str(procedure))
    return MulticenterDesign(procedure=proc, center_design=center, beta_M_se=beta_m)


def create_app() -> FastAPI:
    app = FastAPI(title="mixtrial planning service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    timeout = float(os.environ.get("PLANNER_TIMEOUT", DEFAULT_TIMEOUT))

    def wrap(fn: Callable[[dict], Any]):
        async def handler(request: Request):
            try:
                body = await request.json()
            except Exception:
                return JSONResponse(
                    {"ok": False, "error": {"code": "validation", "message": "invalid JSON body"}},
                    status_code=400,
                )
            try:
                result = fn(body if isinstance(body, dict) else {})
                return JSONResponse({"ok": True, "result": result})
            except (ValueError, KeyError, TypeError) as e:
                return JSONResponse(
                    {"ok": False, "error": {"code": "validation", "message": str(e)}},
                    status_code=400,
                )
            except InfeasibleDesignError as e:
                return JSONResponse(
                    {"ok": False, "error": {"code": "infeasible", "message": str(e)}},
                    status_code=422,
                )
            except ResourceLimitError as e:
                return JSONResponse(
                    {"ok": False, "error": {"code": "resource", "message": str(e)}},
                    status_code=422,
                )
            except Exception as e:  # pragma: no cover - defensive
                return JSONResponse(
                    {"ok": False, "error": {"code": "internal", "message": str(e)}},
                    status_code=500,
                )

        return handler

    @app.get("/healthz")
    async def healthz():
        return {"ok": True}

    def plan_one(body: dict) -> dict:
        region = _region(body)
        alpha, beta_max = (float(x) for x in _require(body, "alpha", "beta_max"))
        mode = body.get("mode", "exact")
        d = plan_one_stage(region, alpha, beta_max, mode)
        return {
            "n": d.n,
            "alpha": d.alpha,
            "eta": d.eta,
            "approximate_n": approximate_sample_size(region, alpha, beta_max),
        }

    def plan_two(body: dict) -> dict:
        region = _region(body)
        alpha, beta_max, n1, alpha0 = _require(body, "alpha", "beta_max", "n1", "alpha0")
        d = plan_two_stage(
            region, float(alpha), float(beta_max), int(n1), float(alpha0),
            mode=body.get("mode", "approximate"),
        )
        return _design_payload(d)

    def plan_mc(body: dict) -> dict:
        region = _region(body)
        alpha, beta_max, n1, alpha0, centers = _require(
            body, "alpha", "beta_max", "n1", "alpha0", "centers"
        )
        kind = body.get("procedure", "hochberg")
        mc = plan_multicenter(
            int(centers), region, float(alpha), float(beta_max), int(n1), float(alpha0),
            procedure_kind=kind,
        )
        one = plan_multicenter_one_stage(
            int(centers), region, float(alpha), float(beta_max), procedure_kind=kind
        )
        alpha_m, beta_m = per_center_targets(int(centers), float(alpha), float(beta_max), kind)
        out = json.loads(mc.to_json())
        out.update(_design_payload(mc.center_design))
        out.update(
            {"per_center_alpha": alpha_m, "per_center_beta": beta_m, "one_stage_n": one.n}
        )
        return out

    def feasible(body: dict) -> dict:
        region = _region(body)
        alpha, beta_max = (float(x) for x in _require(body, "alpha", "beta_max"))
        n = int(body.get("n") or plan_one_stage(region, alpha, beta_max).n)
        feas = feasibility(region, alpha, beta_max, n)
        return {
            "n1_min": feas.n1_min,
            "n1_max": feas.n1_max,
            "alpha0_upper": [
                [n1, feas.alpha0_upper(n1)] for n1 in range(feas.n1_min, feas.n1_max + 1)
            ],
        }

    def run_sweep(body: dict) -> dict:
        region = _region(body)
        alpha, beta_max = (float(x) for x in _require(body, "alpha", "beta_max"))
        if body.get("centers"):
            alpha, beta_max = per_center_targets(
                int(body["centers"]), alpha, beta_max, body.get("procedure", "hochberg")
            )
        n1_grid = _grid(body.get("n1_grid"), integer=True)
        alpha0_grid = _grid(body.get("alpha0_grid"))
        rows = sweep(
            region, alpha, beta_max, n1_grid, alpha0_grid,
            mode=body.get("mode", "approximate"),
            budget_seconds=timeout,
        )
        return {
            "alpha": alpha,
            "beta_max": beta_max,
            "rows": [
                {
                    "n1": r.n1,
                    "alpha0": r.alpha0,
                    "feasible": r.feasible,
                    "alpha1": None if not r.feasible else r.alpha1,
                    "n2": None if not r.feasible else r.n2,
                    "eta0": None if not r.feasible else r.eta0,
                    "eta1": None if not r.feasible else r.eta1,
                    "eta2": None if not r.feasible else r.eta2,
                    "q0": None if not r.feasible else r.q0,
                    "q1": None if not r.feasible else r.q1,
                    "total": None if not r.feasible else r.total,
                }
                for r in rows
            ],
        }

    def surface(body: dict) -> dict:
        d = _two_stage(body)
        kind = body.get("kind", "false-negative")
        if kind not in ("false-negative", "second-stage-prob"):
            raise ValueError("kind must be false-negative or second-stage-prob")
        mu_grid = _grid(body.get("mu_grid"))
        p_grid = _grid(body.get("p_grid"))
        alpha = float(body.get("alpha", d.alpha))
        mode = body.get("mode", "exact")
        values = []
        for mu in mu_grid:
            row = []
            for p in p_grid:
                pt = MixturePoint(float(mu), float(p))
                if kind == "false-negative":
                    row.append(beta2(d, alpha, pt, mode))
                else:
                    row.append(second_stage_probability(d, pt, mode))
            values.append(row)
        return {"kind": kind, "mu": mu_grid, "p": p_grid, "values": values}

    def beta_table(body: dict) -> dict:
        mc = _mc_from_body(body)
        kind = body.get("kind", "exact")
        if kind == "bound":
            region = _region(body)
            table = beta_fw_bound_table(mc, region, mode=body.get("mode", "exact"))
        elif kind == "exact":
            mu_star, p_star = _require(body, "mu_star", "p_star")
            table = beta_fw_table(
                mc, MixturePoint(float(mu_star), float(p_star)), mode=body.get("mode", "exact")
            )
        else:
            raise ValueError("kind must be exact or bound")
        return _table_payload(table)

    def simulate(body: dict) -> dict:
        mc = _mc_from_body(body)
        mu_star, p_star, strong = _require(body, "mu_star", "p_star", "strong")
        config = SimulationConfig(
            n_centers=mc.n_centers,
            n_strong=int(strong),
            strong_point=MixturePoint(float(mu_star), float(p_star)),
            delta=float(body.get("delta", 0.0)),
            replications=int(body.get("replications", 1000)),
            seed=int(body.get("seed", 0)),
        )
        return _table_payload(empirical_beta_fw(config, mc))

    app.post("/plan/one-stage")(wrap(plan_one))
    app.post("/plan/two-stage")(wrap(plan_two))
    app.post("/plan/multicenter")(wrap(plan_mc))
    app.post("/feasible")(wrap(feasible))
    app.post("/sweep")(wrap(run_sweep))
    app.post("/surface")(wrap(surface))
    app.post("/beta-table")(wrap(beta_table))
    app.post("/simulate")(wrap(simulate))
    return app


app = create_app()


def main() -> None:  # pragma: no cover - thin wrapper
    import uvicorn

    port = int(os.environ.get("PLANNER_PORT", DEFAULT_PORT))
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":  # pragma: no cover
    main()
