/**
 * Region-of-strong-effect draft editing with inline validation.
 *
 * The UI mirrors the server's invariants before any request is sent so a
 * broken staircase never leaves the browser: corner effects must be
 * strictly decreasing, prevalences strictly increasing within (0, 1].
 */
import type { RegionJson } from "./types.js";

export interface Corner {
  mu: number;
  p: number;
}

export type RegionViolation =
  | { kind: "empty"; message: string }
  | { kind: "mu-positive"; index: number; message: string }
  | { kind: "mu-decreasing"; index: number; message: string }
  | { kind: "p-range"; index: number; message: string }
  | { kind: "p-increasing"; index: number; message: string };

/** First violated staircase constraint, or null for a valid draft. */
export function validateCorners(corners: Corner[]): RegionViolation | null {
  if (corners.length === 0) {
    return { kind: "empty", message: "the region needs at least one corner" };
  }
  for (let i = 0; i < corners.length; i++) {
    const { mu, p } = corners[i];
    if (!(mu > 0)) {
      return {
        kind: "mu-positive",
        index: i,
        message: `corner ${i + 1}: the effect must be positive (got ${mu})`,
      };
    }
    if (!(p > 0) || p > 1) {
      return {
        kind: "p-range",
        index: i,
        message: `corner ${i + 1}: the prevalence must lie in (0, 1] (got ${p})`,
      };
    }
    if (i > 0 && !(mu < corners[i - 1].mu)) {
      return {
        kind: "mu-decreasing",
        index: i,
        message: `corner ${i + 1}: effects must be strictly decreasing (${mu} >= ${corners[i - 1].mu})`,
      };
    }
    if (i > 0 && !(p > corners[i - 1].p)) {
      return {
        kind: "p-increasing",
        index: i,
        message: `corner ${i + 1}: prevalences must be strictly increasing (${p} <= ${corners[i - 1].p})`,
      };
    }
  }
  return null;
}

export function toRegionJson(corners: Corner[]): RegionJson {
  const violation = validateCorners(corners);
  if (violation) {
    throw new Error(violation.message);
  }
  return { mu: corners.map((c) => c.mu), p: corners.map((c) => c.p) };
}

export function fromRegionJson(json: RegionJson): Corner[] {
  if (!Array.isArray(json.mu) || !Array.isArray(json.p) || json.mu.length !== json.p.length) {
    throw new Error("region JSON must carry equal-length mu and p arrays");
  }
  const corners = json.mu.map((mu, i) => ({ mu, p: json.p[i] }));
  const violation = validateCorners(corners);
  if (violation) {
    throw new Error(violation.message);
  }
  return corners;
}

/** Membership test for drawing the shaded staircase (implicit p_{s+1} = 1). */
export function regionContains(corners: Corner[], mu: number, p: number): boolean {
  if (corners.length === 0 || p < corners[0].p || p > 1 || mu <= 0) {
    return false;
  }
  let required = corners[corners.length - 1].mu;
  for (let i = corners.length - 1; i >= 0; i--) {
    if (p >= corners[i].p) {
      required = corners[i].mu;
      break;
    }
  }
  return mu >= required;
}

/**
 * Applies an edit (move/add/delete) only when the result stays valid;
 * returns the violated constraint otherwise so it can be shown inline.
 */
export function tryEdit(
  corners: Corner[],
  edit:
    | { op: "move"; index: number; mu: number; p: number }
    | { op: "add"; mu: number; p: number }
    | { op: "delete"; index: number },
): { corners: Corner[]; violation: RegionViolation | null } {
  const next = corners.map((c) => ({ ...c }));
  if (edit.op === "move") {
    next[edit.index] = { mu: edit.mu, p: edit.p };
  } else if (edit.op === "add") {
    next.push({ mu: edit.mu, p: edit.p });
    next.sort((a, b) => a.p - b.p);
  } else {
    next.splice(edit.index, 1);
  }
  const violation = next.length === 0 ? null : validateCorners(next);
  if (violation) {
    return { corners, violation };
  }
  return { corners: next, violation: null };
}

/** SVG path for the staircase boundary in data coordinates. */
export function staircasePath(
  corners: Corner[],
  muMax: number,
  sx: (mu: number) => number,
  sy: (p: number) => number,
): string {
  if (corners.length === 0) {
    return "";
  }
  const s = corners.length;
  let d = `M ${sx(muMax)} ${sy(corners[0].p)}`;
  for (let i = 0; i < s; i++) {
    d += ` L ${sx(corners[i].mu)} ${sy(corners[i].p)}`;
    const nextP = i + 1 < s ? corners[i + 1].p : 1;
    d += ` L ${sx(corners[i].mu)} ${sy(nextP)}`;
  }
  d += ` L ${sx(muMax)} ${sy(1)}`;
  return d;
}
