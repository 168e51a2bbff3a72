/**
 * Trade-off explorer logic: grid layout, the diverging color scale, and
 * minima highlighting for the q0/n, q1/n and total/n heatmaps.
 *
 * The color scale is centered at ratio 1.0 (the one-stage sample size):
 * values below one show a gain over the one-stage design, values above one
 * a loss.  All numbers come from the sweep response; nothing is recomputed.
 */
import type { SweepRowJson } from "./types.js";

export type Metric = "q0" | "q1" | "total";

export interface HeatmapCell {
  n1: number;
  alpha0: number;
  row: SweepRowJson;
  ratio: number | null;
  color: string;
  isMin: boolean;
}

export interface HeatmapGrid {
  n1Values: number[];
  alpha0Values: number[];
  cells: HeatmapCell[][];
  minValue: number | null;
  minCells: { n1: number; alpha0: number }[];
}

/** Diverging blue-white-red scale centered at 1.0. */
export function divergingColor(ratio: number, spread = 0.5): string {
  const t = Math.max(-1, Math.min(1, (ratio - 1.0) / spread));
  const lerp = (a: number, b: number, u: number) => Math.round(a + (b - a) * u);
  let rgb: [number, number, number];
  if (t < 0) {
    const u = t + 1;
    rgb = [lerp(33, 247, u), lerp(102, 247, u), lerp(172, 247, u)];
  } else {
    rgb = [lerp(247, 178, t), lerp(247, 24, t), lerp(247, 43, t)];
  }
  return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
}

export const INFEASIBLE_COLOR = "#d8d8d8";

function metricValue(row: SweepRowJson, metric: Metric): number | null {
  if (!row.feasible) {
    return null;
  }
  return row[metric];
}

export function buildHeatmap(
  rows: SweepRowJson[],
  metric: Metric,
  oneStageN: number,
  tolerance = 1e-9,
): HeatmapGrid {
  const n1Values = [...new Set(rows.map((r) => r.n1))].sort((a, b) => a - b);
  const alpha0Values = [...new Set(rows.map((r) => r.alpha0))].sort((a, b) => a - b);
  const byKey = new Map(rows.map((r) => [`${r.n1}|${r.alpha0}`, r]));

  let minValue: number | null = null;
  for (const r of rows) {
    const v = metricValue(r, metric);
    if (v !== null && (minValue === null || v < minValue)) {
      minValue = v;
    }
  }
  const minCells: { n1: number; alpha0: number }[] = [];
  if (minValue !== null) {
    for (const r of rows) {
      const v = metricValue(r, metric);
      if (v !== null && v <= minValue + tolerance) {
        minCells.push({ n1: r.n1, alpha0: r.alpha0 });
      }
    }
  }

  const cells = alpha0Values.map((alpha0) =>
    n1Values.map((n1) => {
      const row = byKey.get(`${n1}|${alpha0}`);
      if (!row) {
        throw new Error(`sweep response is missing cell (${n1}, ${alpha0})`);
      }
      const v = metricValue(row, metric);
      const ratio = v === null ? null : v / oneStageN;
      return {
        n1,
        alpha0,
        row,
        ratio,
        color: ratio === null ? INFEASIBLE_COLOR : divergingColor(ratio),
        isMin:
          v !== null && minValue !== null && v <= minValue + tolerance,
      };
    }),
  );
  return { n1Values, alpha0Values, cells, minValue, minCells };
}

/** Hover payload: the row's planning numbers exactly as the service sent them. */
export function hoverDetails(row: SweepRowJson): string {
  if (!row.feasible) {
    return `(${row.n1}, ${row.alpha0}): infeasible`;
  }
  return (
    `(${row.n1}, ${row.alpha0}): alpha1=${row.alpha1} n2=${row.n2} ` +
    `q0=${row.q0} q1=${row.q1} total=${row.total}`
  );
}
