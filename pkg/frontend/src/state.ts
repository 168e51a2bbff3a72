/**
 * Planning session state.
 *
 * Pure reducer + append-only what-if history, so every state the UI can
 * reach serializes to the request sequence that produced it.  In-flight
 * responses carry the request id they answered; stale ones are discarded.
 */
import type { Corner } from "./region.js";
import type {
  MulticenterPlan,
  ProcedureKind,
  SurfaceResult,
  SweepResult,
  TableResult,
  TwoStagePlan,
} from "./types.js";

export interface Snapshot {
  label: string;
  muStar: number;
  pStar: number;
  procedure: ProcedureKind;
  table: TableResult;
}

export interface SelectedCell {
  n1: number;
  alpha0: number;
  plan?: TwoStagePlan | MulticenterPlan;
  falseNegative?: SurfaceResult;
  secondStage?: SurfaceResult;
}

export interface PlanSession {
  corners: Corner[];
  alpha: number;
  betaMax: number;
  centers: number;
  procedure: ProcedureKind;
  oneStageN: number | null;
  sweep: SweepResult | null;
  selected: SelectedCell | null;
  snapshots: Snapshot[];
  lastRequestId: number;
  appliedRequestId: number;
}

export function initialSession(): PlanSession {
  return {
    corners: [
      { mu: 2.0, p: 0.2 },
      { mu: 1.0, p: 0.4 },
      { mu: 0.7, p: 0.6 },
    ],
    alpha: 0.05,
    betaMax: 0.2,
    centers: 1,
    procedure: "hochberg",
    oneStageN: null,
    sweep: null,
    selected: null,
    snapshots: [],
    lastRequestId: 0,
    appliedRequestId: 0,
  };
}

export type SessionEvent =
  | { type: "region-changed"; corners: Corner[] }
  | { type: "targets-changed"; alpha: number; betaMax: number }
  | { type: "centers-changed"; centers: number; procedure: ProcedureKind }
  | { type: "request-started" }
  | { type: "one-stage-loaded"; requestId: number; n: number }
  | { type: "sweep-loaded"; requestId: number; sweep: SweepResult }
  | { type: "cell-selected"; n1: number; alpha0: number }
  | {
      type: "cell-loaded";
      requestId: number;
      plan: TwoStagePlan | MulticenterPlan;
      falseNegative: SurfaceResult;
      secondStage: SurfaceResult;
    }
  | { type: "snapshot-pinned"; snapshot: Snapshot }
  | { type: "snapshots-cleared" };

/** Planning inputs invalidate everything computed from the previous ones. */
function resetResults(s: PlanSession): PlanSession {
  return { ...s, oneStageN: null, sweep: null, selected: null };
}

export function reduce(s: PlanSession, ev: SessionEvent): PlanSession {
  switch (ev.type) {
    case "region-changed":
      return resetResults({ ...s, corners: ev.corners });
    case "targets-changed":
      return resetResults({ ...s, alpha: ev.alpha, betaMax: ev.betaMax });
    case "centers-changed":
      return resetResults({ ...s, centers: ev.centers, procedure: ev.procedure });
    case "request-started":
      return { ...s, lastRequestId: s.lastRequestId + 1 };
    case "one-stage-loaded":
      if (ev.requestId < s.appliedRequestId) {
        return s;
      }
      return { ...s, oneStageN: ev.n, appliedRequestId: ev.requestId };
    case "sweep-loaded":
      if (ev.requestId < s.appliedRequestId) {
        return s;
      }
      return { ...s, sweep: ev.sweep, appliedRequestId: ev.requestId };
    case "cell-selected":
      return { ...s, selected: { n1: ev.n1, alpha0: ev.alpha0 } };
    case "cell-loaded":
      if (ev.requestId < s.appliedRequestId || s.selected === null) {
        return s;
      }
      return {
        ...s,
        appliedRequestId: ev.requestId,
        selected: {
          ...s.selected,
          plan: ev.plan,
          falseNegative: ev.falseNegative,
          secondStage: ev.secondStage,
        },
      };
    case "snapshot-pinned":
      // history is append-only within the browser session
      return { ...s, snapshots: [...s.snapshots, ev.snapshot] };
    case "snapshots-cleared":
      return { ...s, snapshots: [] };
  }
}

const STORAGE_KEY = "mixtrial-plan-session";

export function serializeSession(s: PlanSession): string {
  return JSON.stringify(s);
}

export function deserializeSession(text: string): PlanSession {
  const parsed = JSON.parse(text) as PlanSession;
  return { ...initialSession(), ...parsed };
}

export function saveSession(s: PlanSession, storage: Pick<Storage, "setItem">): void {
  storage.setItem(STORAGE_KEY, serializeSession(s));
}

export function loadSession(storage: Pick<Storage, "getItem">): PlanSession {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) {
    return initialSession();
  }
  try {
    return deserializeSession(raw);
  } catch {
    return initialSession();
  }
}
