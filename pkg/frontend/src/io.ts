/** File-level entry points: load trajectory CSVs and write rendered figures. */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { basename, dirname, resolve } from "node:path";

import { parseTrajectory, Trajectory } from "./csv.js";
import type { FigureSpec } from "./figure.js";
import { renderFigure } from "./render.js";

/**
 * Legend/title label for a CSV path: the directory name for the CLI's
 * standard `<scenario>/trajectory.csv` layout, the file stem otherwise.
 */
export function trajectoryLabel(path: string): string {
  const stem = basename(path).replace(/\.[^.]*$/, "");
  return stem === "trajectory" ? basename(dirname(resolve(path))) : stem;
}

export function loadTrajectory(path: string): Trajectory {
  const text = readFileSync(path, "utf8");
  return parseTrajectory(text, trajectoryLabel(path));
}

/** Render a figure spec to its output path; returns the path written. */
export function render(spec: FigureSpec): string {
  const inputs = spec.inputs.map(loadTrajectory);
  const svg = renderFigure(spec.kind, inputs);
  mkdirSync(dirname(resolve(spec.output)), { recursive: true });
  writeFileSync(spec.output, `${svg}\n`);
  return spec.output;
}
