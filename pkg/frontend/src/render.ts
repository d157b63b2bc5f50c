/**
 * DOM-free SVG rendering of trajectory figures.
 *
 * Every figure is a vertical stack of panels sharing the same width.  Curves
 * and stacked areas are emitted as path data via d3-shape, so rendering is a
 * pure string transformation: deterministic given the parsed inputs, with no
 * document or canvas involved.
 */

import { scaleLinear, type ScaleLinear } from "d3-scale";
import { interpolateGreens } from "d3-scale-chromatic";
import { area, line } from "d3-shape";

import { SchemaError, Trajectory } from "./csv.js";
import type { FigureKind } from "./figure.js";
import { el, textEl } from "./svg.js";

export const LAYOUT = {
  width: 760,
  panelHeight: 250,
  panelGap: 26,
  pad: 6,
  margin: { top: 34, right: 180, bottom: 46, left: 60 },
} as const;

export const INNER_WIDTH =
  LAYOUT.width - LAYOUT.margin.left - LAYOUT.margin.right;
export const INNER_HEIGHT =
  LAYOUT.panelHeight - LAYOUT.margin.top - LAYOUT.margin.bottom;

/** Compartment line colors (infected red, susceptible green, immune blue). */
export const COLORS: Record<string, string> = {
  S: "#2ca02c",
  I: "#d62728",
  R: "#1f77b4",
  N: "#2ca02c",
};

/** Color cycle for figures overlaying several input files. */
export const CYCLE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
] as const;

const DASHES = ["", "6 4", "2 3"] as const;

/**
 * Shade of green for immunity band j of 0..m: darkest at p near 0 (most
 * susceptible), lightest at p near 1 (most immune).
 */
export function bandShade(j: number, m: number): string {
  const s = m === 0 ? 0 : j / m;
  return interpolateGreens(0.92 - 0.72 * s);
}

function bandLabel(j: number, m: number): string {
  const p = m === 0 ? 0 : j / m;
  return `p ≈ ${Math.round(p * 1000) / 1000}`;
}

interface Series {
  label: string;
  color: string;
  t: Float64Array;
  y: Float64Array;
  dash?: string;
  width?: number;
}

interface Band {
  label: string;
  fill: string;
  index: number;
  t: Float64Array;
  lower: Float64Array;
  upper: Float64Array;
}

interface Panel {
  title: string;
  yLabel: string;
  bands: Band[];
  series: Series[];
}

const round2 = (v: number): number => Math.round(v * 100) / 100;

const indices = (n: number): number[] => Array.from({ length: n }, (_, i) => i);

function extent(panel: Panel): { t0: number; t1: number; y0: number; y1: number } {
  let t0 = Infinity;
  let t1 = -Infinity;
  let y0 = 0;
  let y1 = -Infinity;
  const scanT = (t: Float64Array): void => {
    for (const v of t) {
      if (v < t0) t0 = v;
      if (v > t1) t1 = v;
    }
  };
  const scanY = (y: Float64Array): void => {
    for (const v of y) {
      if (v < y0) y0 = v;
      if (v > y1) y1 = v;
    }
  };
  for (const band of panel.bands) {
    scanT(band.t);
    scanY(band.lower);
    scanY(band.upper);
  }
  for (const series of panel.series) {
    scanT(series.t);
    scanY(series.y);
  }
  if (!Number.isFinite(t0)) {
    t0 = 0;
    t1 = 1;
  } else if (t1 <= t0) {
    t1 = t0 + 1;
  }
  if (!(y1 > y0)) {
    y1 = y0 + 1;
  }
  y1 += 0.05 * (y1 - y0);
  return { t0, t1, y0, y1 };
}

function axisBottom(x: ScaleLinear<number, number>): string {
  const parts = [
    el("line", {
      x1: 0,
      y1: INNER_HEIGHT,
      x2: INNER_WIDTH,
      y2: INNER_HEIGHT,
      stroke: "#000",
    }),
  ];
  const format = x.tickFormat(6);
  for (const tick of x.ticks(6)) {
    const px = round2(x(tick));
    parts.push(
      el("line", { x1: px, y1: INNER_HEIGHT, x2: px, y2: INNER_HEIGHT + 5, stroke: "#000" }),
      textEl(
        { x: px, y: INNER_HEIGHT + 18, "text-anchor": "middle", "font-size": 11 },
        format(tick),
      ),
    );
  }
  return el("g", { class: "axis axis-x" }, parts);
}

function axisLeft(y: ScaleLinear<number, number>): string {
  const parts = [
    el("line", { x1: 0, y1: 0, x2: 0, y2: INNER_HEIGHT, stroke: "#000" }),
  ];
  const format = y.tickFormat(5);
  for (const tick of y.ticks(5)) {
    const py = round2(y(tick));
    parts.push(
      el("line", { x1: -5, y1: py, x2: 0, y2: py, stroke: "#000" }),
      textEl(
        { x: -8, y: py, dy: "0.32em", "text-anchor": "end", "font-size": 11 },
        format(tick),
      ),
    );
  }
  return el("g", { class: "axis axis-y" }, parts);
}

function legend(panel: Panel): string {
  const rows: string[] = [];
  let k = 0;
  for (const band of panel.bands) {
    rows.push(
      el("g", { transform: `translate(0,${k * 16})` }, [
        el("rect", { x: 0, y: -9, width: 12, height: 12, fill: band.fill, stroke: "#888", "stroke-width": 0.5 }),
        textEl({ x: 18, y: 0, dy: "0.1em", "font-size": 11 }, band.label),
      ]),
    );
    k += 1;
  }
  for (const series of panel.series) {
    const swatch: Record<string, string | number> = {
      x1: 0,
      y1: -3,
      x2: 14,
      y2: -3,
      stroke: series.color,
      "stroke-width": series.width ?? 1.6,
    };
    if (series.dash) swatch["stroke-dasharray"] = series.dash;
    rows.push(
      el("g", { transform: `translate(0,${k * 16})` }, [
        el("line", swatch),
        textEl({ x: 18, y: 0, dy: "0.1em", "font-size": 11 }, series.label),
      ]),
    );
    k += 1;
  }
  return el(
    "g",
    { class: "legend", transform: `translate(${INNER_WIDTH + 16},10)` },
    rows,
  );
}

function drawPanel(panel: Panel, index: number): string {
  const { t0, t1, y0, y1 } = extent(panel);
  const x = scaleLinear().domain([t0, t1]).range([0, INNER_WIDTH]);
  const y = scaleLinear().domain([y0, y1]).range([INNER_HEIGHT, 0]);

  const parts: string[] = [];
  for (const band of panel.bands) {
    const path = area<number>()
      .x((i) => round2(x(band.t[i])))
      .y0((i) => round2(y(band.lower[i])))
      .y1((i) => round2(y(band.upper[i])));
    parts.push(
      el("path", {
        d: path(indices(band.t.length)) ?? "",
        class: "band",
        "data-band": band.index,
        fill: band.fill,
      }),
    );
  }
  for (const series of panel.series) {
    const path = line<number>()
      .x((i) => round2(x(series.t[i])))
      .y((i) => round2(y(series.y[i])));
    const attrs: Record<string, string | number> = {
      d: path(indices(series.t.length)) ?? "",
      class: "series",
      "data-series": series.label,
      fill: "none",
      stroke: series.color,
      "stroke-width": series.width ?? 1.6,
    };
    if (series.dash) attrs["stroke-dasharray"] = series.dash;
    parts.push(el("path", attrs));
  }
  parts.push(axisBottom(x), axisLeft(y));
  parts.push(
    textEl({ x: 0, y: -14, "font-size": 13, "font-weight": 600 }, panel.title),
    textEl(
      { x: INNER_WIDTH / 2, y: INNER_HEIGHT + 36, "text-anchor": "middle", "font-size": 12 },
      "t (days)",
    ),
    el("g", { transform: `translate(-44,${INNER_HEIGHT / 2})` }, [
      textEl(
        { transform: "rotate(-90)", "text-anchor": "middle", "font-size": 12 },
        panel.yLabel,
      ),
    ]),
  );
  parts.push(legend(panel));

  const yOffset = LAYOUT.pad + index * (LAYOUT.panelHeight + LAYOUT.panelGap);
  return el(
    "g",
    {
      class: "panel",
      transform: `translate(${LAYOUT.margin.left},${yOffset + LAYOUT.margin.top})`,
    },
    parts,
  );
}

function totalNoninfected(traj: Trajectory): Float64Array {
  const bands = traj.bandColumns("N");
  const total = new Float64Array(traj.length);
  for (const band of bands) {
    for (let i = 0; i < total.length; i += 1) {
      total[i] += band[i];
    }
  }
  return total;
}

function compartmentSeries(traj: Trajectory, dash: string, tag: (label: string) => string): Series[] {
  if (traj.shape === "scalar") {
    return ["S", "I", "R"].map((name) => ({
      label: tag(name),
      color: COLORS[name],
      t: traj.t,
      y: traj.column(name),
      dash: dash || undefined,
    }));
  }
  return [
    { label: tag("N"), color: COLORS.N, t: traj.t, y: totalNoninfected(traj), dash: dash || undefined },
    { label: tag("I"), color: COLORS.I, t: traj.t, y: traj.column("I"), dash: dash || undefined },
  ];
}

function contactSeries(traj: Trajectory, dash: string, tag: (label: string) => string): Series[] {
  if (traj.shape === "scalar") {
    return [
      {
        label: tag("c_S"),
        color: COLORS.S,
        t: traj.t,
        y: traj.column("c_S"),
        dash: dash || undefined,
      },
    ];
  }
  const m = traj.m!;
  return traj.bandColumns("c").map((column, j) => ({
    label: tag(`c_${j}`),
    color: bandShade(j, m),
    t: traj.t,
    y: column,
    dash: dash || undefined,
  }));
}

function trajectoryPanels(inputs: Trajectory[]): Panel[] {
  if (inputs.length < 1 || inputs.length > 2) {
    throw new SchemaError(
      `trajectory figures take one or two inputs, got ${inputs.length}`,
    );
  }
  const multi = inputs.length > 1;
  const names = inputs.map((traj) => traj.source).join(" vs ");
  const top: Panel = {
    title: `Epidemic trajectories (${names})`,
    yLabel: "population fraction",
    bands: [],
    series: [],
  };
  const bottom: Panel = {
    title: "Nash-optimal contact rates",
    yLabel: "contacts per day",
    bands: [],
    series: [],
  };
  inputs.forEach((traj, i) => {
    const tag = (label: string): string =>
      multi ? `${label} — ${traj.source}` : label;
    top.series.push(...compartmentSeries(traj, DASHES[i % DASHES.length], tag));
    bottom.series.push(...contactSeries(traj, DASHES[i % DASHES.length], tag));
  });
  return [top, bottom];
}

function stackedBandsPanels(inputs: Trajectory[]): Panel[] {
  if (inputs.length !== 1) {
    throw new SchemaError(
      `stacked-bands figures take exactly one input, got ${inputs.length}`,
    );
  }
  const traj = inputs[0];
  if (traj.shape !== "structured") {
    throw new SchemaError(
      `${traj.source}: stacked-bands requires a structured trajectory with N_j band columns`,
    );
  }
  const m = traj.m!;
  const n = traj.length;
  const bands: Band[] = [];
  let lower = new Float64Array(n);
  traj.bandColumns("N").forEach((column, j) => {
    const upper = new Float64Array(n);
    for (let i = 0; i < n; i += 1) {
      upper[i] = lower[i] + column[i];
    }
    bands.push({
      label: bandLabel(j, m),
      fill: bandShade(j, m),
      index: j,
      t: traj.t,
      lower,
      upper,
    });
    lower = upper;
  });
  const top: Panel = {
    title: `Noninfected immunity bands (${traj.source})`,
    yLabel: "population fraction",
    bands,
    series: [
      { label: "I", color: COLORS.I, t: traj.t, y: traj.column("I"), width: 1.8 },
    ],
  };
  const bottom: Panel = {
    title: "Nash-optimal contact rates per band",
    yLabel: "contacts per day",
    bands: [],
    series: contactSeries(traj, "", (label) => label),
  };
  return [top, bottom];
}

function contactRatesPanels(inputs: Trajectory[]): Panel[] {
  if (inputs.length === 0) {
    throw new SchemaError("contact-rates figures need at least one input");
  }
  const multi = inputs.length > 1;
  const panel: Panel = {
    title: `Nash-optimal contact rates (${inputs.map((t) => t.source).join(", ")})`,
    yLabel: "contacts per day",
    bands: [],
    series: [],
  };
  inputs.forEach((traj, i) => {
    const tag = (label: string): string =>
      multi ? `${label} — ${traj.source}` : label;
    if (traj.shape === "scalar") {
      panel.series.push({
        label: tag("c_S"),
        color: CYCLE[i % CYCLE.length],
        t: traj.t,
        y: traj.column("c_S"),
        dash: DASHES[i % DASHES.length] || undefined,
      });
    } else {
      panel.series.push(...contactSeries(traj, DASHES[i % DASHES.length], tag));
    }
  });
  return [panel];
}

function thetaSweepPanels(inputs: Trajectory[]): Panel[] {
  if (inputs.length < 2) {
    throw new SchemaError(
      `theta-sweep figures need at least two inputs, got ${inputs.length}`,
    );
  }
  for (const traj of inputs) {
    if (traj.shape !== "scalar") {
      throw new SchemaError(
        `${traj.source}: theta-sweep expects scalar trajectories (one file per theta value)`,
      );
    }
  }
  const top: Panel = {
    title: "Infection dynamics",
    yLabel: "population fraction",
    bands: [],
    series: inputs.map((traj, i) => ({
      label: `I — ${traj.source}`,
      color: CYCLE[i % CYCLE.length],
      t: traj.t,
      y: traj.column("I"),
    })),
  };
  const bottom: Panel = {
    title: "Nash-optimal contact rates for Susceptibles",
    yLabel: "contacts per day",
    bands: [],
    series: inputs.map((traj, i) => ({
      label: `c_S — ${traj.source}`,
      color: CYCLE[i % CYCLE.length],
      t: traj.t,
      y: traj.column("c_S"),
    })),
  };
  return [top, bottom];
}

function buildPanels(kind: FigureKind, inputs: Trajectory[]): Panel[] {
  switch (kind) {
    case "trajectory":
      return trajectoryPanels(inputs);
    case "stacked-bands":
      return stackedBandsPanels(inputs);
    case "contact-rates":
      return contactRatesPanels(inputs);
    case "theta-sweep":
      return thetaSweepPanels(inputs);
  }
}

/** Render a figure to an SVG string.  Pure: same inputs, same bytes. */
export function renderFigure(kind: FigureKind, inputs: Trajectory[]): string {
  const panels = buildPanels(kind, inputs);
  const height =
    2 * LAYOUT.pad +
    panels.length * (LAYOUT.panelHeight + LAYOUT.panelGap) -
    LAYOUT.panelGap;
  return el(
    "svg",
    {
      xmlns: "http://www.w3.org/2000/svg",
      width: LAYOUT.width,
      height,
      viewBox: `0 0 ${LAYOUT.width} ${height}`,
      "font-family": "sans-serif",
    },
    [
      el("rect", { x: 0, y: 0, width: LAYOUT.width, height, fill: "#fff" }),
      ...panels.map(drawPanel),
    ],
  );
}
