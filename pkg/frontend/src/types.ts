/** Wire types mirroring the planning service's JSON API. */

export interface RegionJson {
  mu: number[];
  p: number[];
}

export interface ApiError {
  code: "validation" | "infeasible" | "resource" | "internal";
  message: string;
}

export type ApiEnvelope<T> =
  | { ok: true; result: T }
  | { ok: false; error: ApiError };

export interface OneStagePlan {
  n: number;
  alpha: number;
  eta: number;
  approximate_n: number;
}

export interface TwoStageDesignJson {
  n1: number;
  n2: number;
  alpha0: number;
  alpha1: number;
  alpha: number;
  eta0: number;
  eta1: number;
  eta2: number;
}

export interface TwoStagePlan extends TwoStageDesignJson {
  q0: number;
  q1: number;
  total: number;
  worst_point: { mu: number; p: number };
}

export type ProcedureKind = "hochberg" | "benjamini_hochberg" | "bonferroni";

export interface MulticenterPlan extends TwoStagePlan {
  procedure: { kind: ProcedureKind; alpha: number; M: number; thresholds: number[] };
  center_design: TwoStageDesignJson;
  beta_M_se: number;
  per_center_alpha: number;
  per_center_beta: number;
  one_stage_n: number;
}

export interface SweepRowJson {
  n1: number;
  alpha0: number;
  feasible: boolean;
  alpha1: number | null;
  n2: number | null;
  eta0: number | null;
  eta1: number | null;
  eta2: number | null;
  q0: number | null;
  q1: number | null;
  total: number | null;
}

export interface SweepResult {
  alpha: number;
  beta_max: number;
  rows: SweepRowJson[];
}

export interface SurfaceResult {
  kind: "false-negative" | "second-stage-prob";
  mu: number[];
  p: number[];
  values: number[][];
}

export interface TableCell {
  M1: number;
  m: number;
  value: number;
}

export interface TableResult {
  kind: "exact" | "bound" | "empirical";
  n_centers: number;
  cells: TableCell[];
  replications?: number;
  seed?: number;
  delta?: number;
}

export interface FeasibleResult {
  n1_min: number;
  n1_max: number;
  alpha0_upper: [number, number][];
}
