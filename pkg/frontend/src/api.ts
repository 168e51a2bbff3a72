/**
 * Typed client for the planning service.
 *
 * Every displayed number originates from these responses; the client keeps
 * raw values untouched (no rounding) so the UI is a pure view of the
 * service's output.
 */
import type {
  ApiEnvelope,
  FeasibleResult,
  MulticenterPlan,
  OneStagePlan,
  ProcedureKind,
  RegionJson,
  SurfaceResult,
  SweepResult,
  TableResult,
  TwoStageDesignJson,
  TwoStagePlan,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class PlannerClient {
  constructor(private readonly baseUrl: string = "http://127.0.0.1:8080") {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = (await resp.json()) as ApiEnvelope<T>;
    if (!payload.ok) {
      throw new ApiRequestError(payload.error.code, payload.error.message);
    }
    return payload.result;
  }

  planOneStage(region: RegionJson, alpha: number, betaMax: number): Promise<OneStagePlan> {
    return this.post("/plan/one-stage", { region, alpha, beta_max: betaMax });
  }

  planTwoStage(
    region: RegionJson,
    alpha: number,
    betaMax: number,
    n1: number,
    alpha0: number,
  ): Promise<TwoStagePlan> {
    return this.post("/plan/two-stage", { region, alpha, beta_max: betaMax, n1, alpha0 });
  }

  planMulticenter(
    region: RegionJson,
    alpha: number,
    betaMax: number,
    n1: number,
    alpha0: number,
    centers: number,
    procedure: ProcedureKind,
  ): Promise<MulticenterPlan> {
    return this.post("/plan/multicenter", {
      region,
      alpha,
      beta_max: betaMax,
      n1,
      alpha0,
      centers,
      procedure,
    });
  }

  feasible(region: RegionJson, alpha: number, betaMax: number): Promise<FeasibleResult> {
    return this.post("/feasible", { region, alpha, beta_max: betaMax });
  }

  sweep(
    region: RegionJson,
    alpha: number,
    betaMax: number,
    n1Grid: { start: number; stop: number; step: number },
    alpha0Grid: { start: number; stop: number; step: number },
    centers?: number,
    procedure?: ProcedureKind,
  ): Promise<SweepResult> {
    return this.post("/sweep", {
      region,
      alpha,
      beta_max: betaMax,
      n1_grid: n1Grid,
      alpha0_grid: alpha0Grid,
      ...(centers ? { centers, procedure } : {}),
    });
  }

  surface(
    design: TwoStageDesignJson,
    kind: "false-negative" | "second-stage-prob",
    muGrid: number[],
    pGrid: number[],
    alpha?: number,
  ): Promise<SurfaceResult> {
    return this.post("/surface", {
      design,
      kind,
      mu_grid: muGrid,
      p_grid: pGrid,
      ...(alpha !== undefined ? { alpha } : {}),
    });
  }

  betaTable(
    design: TwoStageDesignJson,
    centers: number,
    procedure: ProcedureKind,
    alpha: number,
    betaMax: number,
    kind: "exact" | "bound",
    options: { muStar?: number; pStar?: number; region?: RegionJson },
  ): Promise<TableResult> {
    return this.post("/beta-table", {
      design,
      centers,
      procedure,
      alpha,
      beta_max: betaMax,
      kind,
      ...(options.muStar !== undefined ? { mu_star: options.muStar } : {}),
      ...(options.pStar !== undefined ? { p_star: options.pStar } : {}),
      ...(options.region ? { region: options.region } : {}),
    });
  }

  simulate(
    design: TwoStageDesignJson,
    centers: number,
    procedure: ProcedureKind,
    alpha: number,
    betaMax: number,
    strong: number,
    muStar: number,
    pStar: number,
    replications: number,
    seed: number,
    delta = 0,
  ): Promise<TableResult> {
    return this.post("/simulate", {
      design,
      centers,
      procedure,
      alpha,
      beta_max: betaMax,
      strong,
      mu_star: muStar,
      p_star: pStar,
      replications,
      seed,
      delta,
    });
  }
}
