/**
 * Error-table presentation: triangular layout, side-by-side what-if
 * comparison, and CSV export in the same schema the CLI emits.
 */
import type { Snapshot } from "./state.js";
import type { TableResult } from "./types.js";

/** value rows indexed by m, columns by M1; empty strings below the diagonal. */
export function triangularLayout(table: TableResult): string[][] {
  const m = table.n_centers;
  const byKey = new Map(table.cells.map((c) => [`${c.M1}|${c.m}`, c.value]));
  const rows: string[][] = [];
  for (let mm = 1; mm <= m; mm++) {
    const row: string[] = [];
    for (let m1 = 1; m1 <= m; m1++) {
      if (mm > m1) {
        row.push("");
      } else {
        const v = byKey.get(`${m1}|${mm}`);
        // displayed digits are the service's own value, untouched
        row.push(v === undefined ? "" : String(v));
      }
    }
    rows.push(row);
  }
  return rows;
}

/** CSV identical to the command-line `beta-table` / `simulate` output. */
export function tableToCsv(table: TableResult): string {
  const extra = table.replications !== undefined;
  const header = "M1,m,value,kind" + (extra ? ",replications,seed,delta" : "");
  const lines = [header];
  const cells = [...table.cells].sort((a, b) => a.M1 - b.M1 || a.m - b.m);
  for (const c of cells) {
    let row = `${c.M1},${c.m},${c.value.toFixed(6)},${table.kind}`;
    if (extra) {
      row += `,${table.replications},${table.seed},${table.delta}`;
    }
    lines.push(row);
  }
  return lines.join("\n") + "\n";
}

export interface ComparisonColumn {
  label: string;
  rows: string[][];
}

/** Pinned snapshots rendered side by side for the what-if panel. */
export function compareSnapshots(snapshots: Snapshot[]): ComparisonColumn[] {
  return snapshots.map((s) => ({
    label: `${s.label} (mu*=${s.muStar}, p*=${s.pStar}, ${s.procedure})`,
    rows: triangularLayout(s.table),
  }));
}

/** True when two snapshots carry cell-for-cell identical tables. */
export function tablesIdentical(a: TableResult, b: TableResult): boolean {
  if (a.n_centers !== b.n_centers || a.cells.length !== b.cells.length) {
    return false;
  }
  const key = (c: { M1: number; m: number }) => `${c.M1}|${c.m}`;
  const bv = new Map(b.cells.map((c) => [key(c), c.value]));
  return a.cells.every((c) => bv.get(key(c)) === c.value);
}
