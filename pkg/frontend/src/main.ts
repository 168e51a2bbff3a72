/**
 * Planning workbench: region editor, trade-off explorer, and what-if
 * comparison panels wired to the planning service.
 *
 * All numerical content comes from service responses; this file only
 * renders and routes user intent.
 */
import { ApiRequestError, PlannerClient } from "./api.js";
import { buildHeatmap, hoverDetails, Metric } from "./heatmap.js";
import { staircasePath, toRegionJson, tryEdit, validateCorners } from "./region.js";
import {
  initialSession,
  loadSession,
  PlanSession,
  reduce,
  saveSession,
  SessionEvent,
} from "./state.js";
import { compareSnapshots, tableToCsv } from "./tables.js";
import type { MulticenterPlan, ProcedureKind, TwoStagePlan } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function isMulticenterPlan(p: TwoStagePlan | MulticenterPlan): p is MulticenterPlan {
  return "center_design" in p;
}

const client = new PlannerClient(
  (window as unknown as { PLANNER_URL?: string }).PLANNER_URL ?? "http://127.0.0.1:8080",
);

let session: PlanSession = typeof localStorage !== "undefined"
  ? loadSession(localStorage)
  : initialSession();

function dispatch(ev: SessionEvent): void {
  session = reduce(session, ev);
  if (typeof localStorage !== "undefined") {
    saveSession(session, localStorage);
  }
  render();
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  return node;
}

function statusLine(message: string, isError = false): void {
  const box = document.getElementById("status");
  if (box) {
    box.textContent = message;
    box.className = isError ? "status error" : "status";
  }
}

// ---------------------------------------------------------------- region

const MU_MAX = 3.0;
const PLOT = { w: 360, h: 300, pad: 34 };
const sx = (mu: number) => PLOT.pad + (mu / MU_MAX) * (PLOT.w - 2 * PLOT.pad);
const sy = (p: number) => PLOT.h - PLOT.pad - p * (PLOT.h - 2 * PLOT.pad);
const invX = (x: number) => ((x - PLOT.pad) / (PLOT.w - 2 * PLOT.pad)) * MU_MAX;
const invY = (y: number) => (PLOT.h - PLOT.pad - y) / (PLOT.h - 2 * PLOT.pad);

let dragIndex: number | null = null;

function renderRegionEditor(root: HTMLElement): void {
  root.replaceChildren();
  const svg = svgEl("svg", {
    width: String(PLOT.w),
    height: String(PLOT.h),
    class: "region-plot",
  });

  const violation = validateCorners(session.corners);
  if (!violation && session.corners.length > 0) {
    const path = staircasePath(session.corners, MU_MAX, sx, sy);
    svg.appendChild(
      svgEl("path", { d: `${path} Z`, fill: "#cfe3f5", stroke: "#3b73a8", "stroke-width": "2" }),
    );
  }
  // axes
  svg.appendChild(svgEl("line", {
    x1: String(PLOT.pad), y1: String(sy(0)), x2: String(PLOT.w - 8), y2: String(sy(0)),
    stroke: "#444",
  }));
  svg.appendChild(svgEl("line", {
    x1: String(PLOT.pad), y1: String(sy(0)), x2: String(PLOT.pad), y2: "8", stroke: "#444",
  }));
  const xlab = svgEl("text", { x: String(PLOT.w / 2), y: String(PLOT.h - 4), "text-anchor": "middle", "font-size": "11" });
  xlab.textContent = "mu (standardized effect)";
  svg.appendChild(xlab);
  const ylab = svgEl("text", {
    x: "10", y: String(PLOT.h / 2), "font-size": "11",
    transform: `rotate(-90 10 ${PLOT.h / 2})`, "text-anchor": "middle",
  });
  ylab.textContent = "p (prevalence)";
  svg.appendChild(ylab);

  session.corners.forEach((c, i) => {
    const dot = svgEl("circle", {
      cx: String(sx(c.mu)), cy: String(sy(c.p)), r: "6",
      fill: "#1d5c96", cursor: "grab", "data-index": String(i),
    });
    dot.addEventListener("mousedown", () => { dragIndex = i; });
    dot.addEventListener("contextmenu", (e) => {
      e.preventDefault();
      applyEdit({ op: "delete", index: i });
    });
    svg.appendChild(dot);
  });

  svg.addEventListener("mousemove", (e) => {
    if (dragIndex === null) return;
    const rect = (svg as unknown as HTMLElement).getBoundingClientRect();
    const mu = Math.max(0.01, Math.min(MU_MAX, invX(e.clientX - rect.left)));
    const p = Math.max(0.01, Math.min(1, invY(e.clientY - rect.top)));
    applyEdit({ op: "move", index: dragIndex, mu: round2(mu), p: round2(p) });
  });
  svg.addEventListener("mouseup", () => { dragIndex = null; });
  svg.addEventListener("dblclick", (e) => {
    const rect = (svg as unknown as HTMLElement).getBoundingClientRect();
    const mu = round2(invX(e.clientX - rect.left));
    const p = round2(invY(e.clientY - rect.top));
    applyEdit({ op: "add", mu, p });
  });
  root.appendChild(svg);

  const msg = el("div", { class: "violation" });
  const lastViolation = root.dataset.violation ?? "";
  msg.textContent = lastViolation;
  root.appendChild(msg);

  const controls = el("div", { class: "row" });
  const exportBtn = el("button", {}, "Export region JSON");
  exportBtn.addEventListener("click", () => {
    const area = document.getElementById("region-json") as HTMLTextAreaElement;
    area.value = JSON.stringify(toRegionJson(session.corners));
  });
  const importBtn = el("button", {}, "Import region JSON");
  importBtn.addEventListener("click", () => {
    const area = document.getElementById("region-json") as HTMLTextAreaElement;
    try {
      const parsed = JSON.parse(area.value) as { mu: number[]; p: number[] };
      const corners = parsed.mu.map((mu, i) => ({ mu, p: parsed.p[i] }));
      const bad = validateCorners(corners);
      if (bad) throw new Error(bad.message);
      dispatch({ type: "region-changed", corners });
    } catch (err) {
      statusLine(`region import failed: ${(err as Error).message}`, true);
    }
  });
  controls.append(exportBtn, importBtn);
  root.appendChild(controls);
  root.appendChild(el("textarea", { id: "region-json", rows: "3", cols: "46" }));
}

function round2(x: number): number {
  return Math.round(x * 100) / 100;
}

function applyEdit(edit: Parameters<typeof tryEdit>[1]): void {
  const { corners, violation } = tryEdit(session.corners, edit);
  const editor = document.getElementById("region-editor");
  if (violation) {
    if (editor) editor.dataset.violation = violation.message;
    render();
    return;
  }
  if (editor) editor.dataset.violation = "";
  dispatch({ type: "region-changed", corners });
}

// ---------------------------------------------------------------- targets

function renderTargets(root: HTMLElement): void {
  root.replaceChildren();
  const form = el("div", { class: "row" });
  const alpha = el("input", { type: "number", step: "0.005", value: String(session.alpha) });
  const beta = el("input", { type: "number", step: "0.01", value: String(session.betaMax) });
  const centers = el("input", { type: "number", min: "1", max: "7", value: String(session.centers) });
  const proc = el("select", {});
  for (const kind of ["hochberg", "benjamini_hochberg", "bonferroni"]) {
    const opt = el("option", { value: kind }, kind);
    if (kind === session.procedure) opt.setAttribute("selected", "selected");
    proc.appendChild(opt);
  }
  const apply = el("button", {}, "Apply targets");
  apply.addEventListener("click", () => {
    dispatch({
      type: "targets-changed",
      alpha: Number(alpha.value),
      betaMax: Number(beta.value),
    });
    dispatch({
      type: "centers-changed",
      centers: Number(centers.value),
      procedure: proc.value as ProcedureKind,
    });
  });
  form.append(
    el("label", {}, "alpha"), alpha,
    el("label", {}, "beta_max"), beta,
    el("label", {}, "centers"), centers,
    el("label", {}, "procedure"), proc,
    apply,
  );
  root.appendChild(form);

  const planBtn = el("button", { id: "plan-button" }, "Plan + sweep");
  if (session.corners.length === 0) {
    planBtn.setAttribute("disabled", "disabled");
  }
  planBtn.addEventListener("click", () => void runSweep());
  root.appendChild(planBtn);
}

async function runSweep(): Promise<void> {
  try {
    const region = toRegionJson(session.corners);
    dispatch({ type: "request-started" });
    const requestId = session.lastRequestId;
    statusLine("planning...");
    const multi = session.centers > 1;
    const one = multi
      ? await client.planOneStage(
          region,
          session.procedure === "bonferroni" ? session.alpha / session.centers : session.alpha,
          1 - Math.pow(1 - session.betaMax, 1 / session.centers),
        )
      : await client.planOneStage(region, session.alpha, session.betaMax);
    dispatch({ type: "one-stage-loaded", requestId, n: one.n });
    const sweep = await client.sweep(
      region,
      session.alpha,
      session.betaMax,
      { start: 15, stop: Math.max(20, one.n - (one.n % 5)), step: 5 },
      { start: 0.55, stop: 0.95, step: 0.025 },
      multi ? session.centers : undefined,
      multi ? session.procedure : undefined,
    );
    dispatch({ type: "sweep-loaded", requestId, sweep });
    statusLine(`sweep done: one-stage n=${one.n}, ${sweep.rows.length} cells`);
  } catch (err) {
    const code = err instanceof ApiRequestError ? ` [${err.code}]` : "";
    statusLine(`request failed${code}: ${(err as Error).message}`, true);
  }
}

// ---------------------------------------------------------------- explorer

function renderHeatmaps(root: HTMLElement): void {
  root.replaceChildren();
  if (!session.sweep || session.oneStageN === null) {
    root.appendChild(el("p", { class: "hint" },
      "Run the sweep to explore the (n1, alpha0) trade-off."));
    return;
  }
  const metrics: { metric: Metric; title: string; highlight: string }[] = [
    { metric: "q0", title: "q0 / n (expected size under the null)", highlight: "#2a9644" },
    { metric: "q1", title: "q1 / n (worst-case expected size)", highlight: "#c43f3f" },
    { metric: "total", title: "(n1 + n2) / n", highlight: "#7141b8" },
  ];
  for (const { metric, title, highlight } of metrics) {
    const grid = buildHeatmap(session.sweep.rows, metric, session.oneStageN);
    const panel = el("div", { class: "heatmap" });
    panel.appendChild(el("h3", {}, title));
    if (grid.minValue !== null) {
      panel.appendChild(el(
        "p", { class: "hint" },
        `min ${metric} = ${grid.minValue} at ${grid.minCells
          .map((c) => `(${c.n1}, ${c.alpha0})`).join(", ")}`,
      ));
    }
    const cw = 14, ch = 12;
    const svg = svgEl("svg", {
      width: String(grid.n1Values.length * cw + 40),
      height: String(grid.alpha0Values.length * ch + 30),
    });
    grid.cells.forEach((rowCells, ai) => {
      rowCells.forEach((cell, ni) => {
        const rect = svgEl("rect", {
          x: String(40 + ni * cw),
          y: String((grid.alpha0Values.length - 1 - ai) * ch),
          width: String(cw - 1),
          height: String(ch - 1),
          fill: cell.color,
          stroke: cell.isMin ? highlight : "none",
          "stroke-width": cell.isMin ? "2.5" : "0",
          cursor: cell.row.feasible ? "pointer" : "default",
        });
        rect.addEventListener("mouseenter", () => statusLine(hoverDetails(cell.row)));
        if (cell.row.feasible) {
          rect.addEventListener("click", () => void selectCell(cell.n1, cell.alpha0));
        }
        svg.appendChild(rect);
      });
    });
    panel.appendChild(svg);
    root.appendChild(panel);
  }
}

async function selectCell(n1: number, alpha0: number): Promise<void> {
  try {
    dispatch({ type: "cell-selected", n1, alpha0 });
    dispatch({ type: "request-started" });
    const requestId = session.lastRequestId;
    statusLine(`planning cell (${n1}, ${alpha0})...`);
    const region = toRegionJson(session.corners);
    const plan: TwoStagePlan | MulticenterPlan =
      session.centers > 1
        ? await client.planMulticenter(
            region, session.alpha, session.betaMax, n1, alpha0,
            session.centers, session.procedure,
          )
        : await client.planTwoStage(region, session.alpha, session.betaMax, n1, alpha0);
    const design = isMulticenterPlan(plan) ? plan.center_design : plan;
    const muGrid = rangeGrid(0.1, 3.0, 0.1);
    const pGrid = rangeGrid(0.0, 1.0, 0.05);
    const [fn, ss] = await Promise.all([
      client.surface(design, "false-negative", muGrid, pGrid, design.alpha),
      client.surface(design, "second-stage-prob", muGrid, pGrid),
    ]);
    dispatch({
      type: "cell-loaded", requestId, plan, falseNegative: fn, secondStage: ss,
    });
    statusLine(`cell (${n1}, ${alpha0}) loaded`);
  } catch (err) {
    statusLine(`cell request failed: ${(err as Error).message}`, true);
  }
}

function rangeGrid(start: number, stop: number, step: number): number[] {
  const out: number[] = [];
  for (let v = start; v <= stop + 1e-9; v += step) {
    out.push(Math.round(v * 1000) / 1000);
  }
  return out;
}

function renderSelected(root: HTMLElement): void {
  root.replaceChildren();
  const sel = session.selected;
  if (!sel || !sel.plan) {
    root.appendChild(el("p", { class: "hint" }, "Click a feasible heatmap cell."));
    return;
  }
  const plan = sel.plan;
  root.appendChild(el("h3", {}, `Design at (n1=${sel.n1}, alpha0=${sel.alpha0})`));
  const list = el("dl", { class: "design" });
  const design = isMulticenterPlan(plan) ? plan.center_design : plan;
  const rows: [string, unknown][] = [
    ["n1", design.n1], ["n2", design.n2], ["alpha1", design.alpha1],
    ["eta0", design.eta0], ["eta1", design.eta1], ["eta2", design.eta2],
    ["q0", plan.q0], ["q1", plan.q1], ["total", plan.total],
  ];
  if ("one_stage_n" in plan) {
    rows.push(["per-center alpha", plan.per_center_alpha]);
    rows.push(["per-center beta", plan.per_center_beta]);
    rows.push(["one-stage n", plan.one_stage_n]);
  }
  for (const [k, v] of rows) {
    list.appendChild(el("dt", {}, k));
    // raw service value, displayed byte-for-byte
    list.appendChild(el("dd", {}, String(v)));
  }
  root.appendChild(list);

  for (const [title, surf] of [
    ["False-negative surface", sel.falseNegative],
    ["Second-stage probability", sel.secondStage],
  ] as const) {
    if (!surf) continue;
    root.appendChild(el("h4", {}, title));
    root.appendChild(renderSurface(surf.mu, surf.p, surf.values));
  }

  const pin = el("div", { class: "row" });
  const muStar = el("input", { type: "number", step: "0.1", value: "2" });
  const pStar = el("input", { type: "number", step: "0.05", value: "0.2" });
  const pinBtn = el("button", {}, "Pin beta_fw table");
  pinBtn.addEventListener("click", () => void pinTable(Number(muStar.value), Number(pStar.value)));
  pin.append(el("label", {}, "mu*"), muStar, el("label", {}, "p*"), pStar, pinBtn);
  root.appendChild(pin);
}

function renderSurface(mu: number[], p: number[], values: number[][]): SVGElement {
  const cw = 6, ch = 5;
  const svg = svgEl("svg", {
    width: String(mu.length * cw + 20),
    height: String(p.length * ch + 10),
  });
  let lo = Infinity, hi = -Infinity;
  for (const row of values) for (const v of row) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  const span = hi > lo ? hi - lo : 1;
  values.forEach((row, i) => {
    row.forEach((v, j) => {
      const t = (v - lo) / span;
      const c = Math.round(245 - t * 190);
      svg.appendChild(svgEl("rect", {
        x: String(20 + i * cw),
        y: String((p.length - 1 - j) * ch),
        width: String(cw), height: String(ch),
        fill: `rgb(${c},${Math.round(225 - t * 120)},255)`,
      }));
    });
  });
  return svg;
}

// ---------------------------------------------------------------- what-if

async function pinTable(muStar: number, pStar: number): Promise<void> {
  const sel = session.selected;
  if (!sel || !sel.plan || session.centers < 2) {
    statusLine("select a multicenter cell first (centers >= 2)", true);
    return;
  }
  try {
    const design = isMulticenterPlan(sel.plan) ? sel.plan.center_design : sel.plan;
    const table = await client.betaTable(
      design, session.centers, session.procedure, session.alpha, session.betaMax,
      "exact", { muStar, pStar },
    );
    dispatch({
      type: "snapshot-pinned",
      snapshot: {
        label: `cell (${sel.n1}, ${sel.alpha0})`,
        muStar, pStar,
        procedure: session.procedure,
        table,
      },
    });
  } catch (err) {
    statusLine(`table request failed: ${(err as Error).message}`, true);
  }
}

function renderWhatIf(root: HTMLElement): void {
  root.replaceChildren();
  root.appendChild(el("h3", {}, "What-if comparison"));
  if (session.snapshots.length === 0) {
    root.appendChild(el("p", { class: "hint" },
      "Pin beta_fw tables for different (mu*, p*) or procedures to compare."));
    return;
  }
  const wrap = el("div", { class: "row" });
  for (const col of compareSnapshots(session.snapshots)) {
    const box = el("div", { class: "snapshot" });
    box.appendChild(el("h4", {}, col.label));
    const tbl = el("table", {});
    const head = el("tr", {});
    head.appendChild(el("th", {}, "m \\ M1"));
    col.rows[0].forEach((_, j) => head.appendChild(el("th", {}, String(j + 1))));
    tbl.appendChild(head);
    col.rows.forEach((row, i) => {
      const tr = el("tr", {});
      tr.appendChild(el("th", {}, String(i + 1)));
      row.forEach((v) => tr.appendChild(el("td", {}, v)));
      tbl.appendChild(tr);
    });
    box.appendChild(tbl);
    wrap.appendChild(box);
  }
  root.appendChild(wrap);
  const exportBtn = el("button", {}, "Export last table CSV");
  exportBtn.addEventListener("click", () => {
    const last = session.snapshots[session.snapshots.length - 1];
    const area = document.getElementById("csv-out") as HTMLTextAreaElement;
    area.value = tableToCsv(last.table);
  });
  const clearBtn = el("button", {}, "Clear pins");
  clearBtn.addEventListener("click", () => dispatch({ type: "snapshots-cleared" }));
  root.append(exportBtn, clearBtn, el("textarea", { id: "csv-out", rows: "4", cols: "46" }));
}

// ---------------------------------------------------------------- render

export function render(): void {
  const editor = document.getElementById("region-editor");
  const targets = document.getElementById("targets");
  const heatmaps = document.getElementById("heatmaps");
  const selected = document.getElementById("selected");
  const whatif = document.getElementById("whatif");
  if (!editor || !targets || !heatmaps || !selected || !whatif) {
    return;
  }
  renderRegionEditor(editor);
  renderTargets(targets);
  renderHeatmaps(heatmaps);
  renderSelected(selected);
  renderWhatIf(whatif);
}

if (typeof document !== "undefined" && document.getElementById("region-editor")) {
  render();
}
