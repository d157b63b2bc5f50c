import { readFileSync } from "node:fs";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { color } from "d3-color";

export const REFDATA = fileURLToPath(new URL("../../refdata", import.meta.url));

export function refPath(scenario: string): string {
  return join(REFDATA, scenario, "trajectory.csv");
}

export function refText(scenario: string): string {
  return readFileSync(refPath(scenario), "utf8");
}

/** Decode an "M x,y L x,y ..." path into coordinate pairs. */
export function pathPoints(d: string): Array<[number, number]> {
  const points: Array<[number, number]> = [];
  const re = /[ML]\s*(-?[\d.eE+-]+),(-?[\d.eE+-]+)/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(d)) !== null) {
    points.push([Number(match[1]), Number(match[2])]);
  }
  return points;
}

/** Vertical segments (equal x, |dy| above threshold) of a polyline path. */
export function verticalSegments(
  d: string,
  minJump: number,
): Array<{ x: number; dy: number }> {
  const points = pathPoints(d);
  const segments: Array<{ x: number; dy: number }> = [];
  for (let i = 1; i < points.length; i += 1) {
    const [x0, y0] = points[i - 1];
    const [x1, y1] = points[i];
    if (x0 === x1 && Math.abs(y1 - y0) >= minJump) {
      segments.push({ x: x1, dy: y1 - y0 });
    }
  }
  return segments;
}

/** The d attribute of the path whose data-series attribute equals label. */
export function seriesPath(svg: string, label: string): string {
  const re = /<path d="([^"]*)" class="series" data-series="([^"]*)"/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(svg)) !== null) {
    if (match[2] === label) return match[1];
  }
  throw new Error(`no series ${JSON.stringify(label)} in SVG`);
}

export function seriesLabels(svg: string): string[] {
  return [...svg.matchAll(/data-series="([^"]*)"/g)].map((m) => m[1]);
}

/** Band fills keyed by band index, in document order. */
export function bandFills(svg: string): string[] {
  return [...svg.matchAll(/class="band" data-band="(\d+)" fill="([^"]*)"/g)]
    .sort((a, b) => Number(a[1]) - Number(b[1]))
    .map((m) => m[2]);
}

export function strokeOf(svg: string, label: string): string {
  const re = new RegExp(
    `data-series="${label.replace(/[.*+?^${}()|[\]\\]/g, "\\$&")}"[^>]*stroke="([^"]*)"`,
  );
  const match = svg.match(re);
  if (!match) throw new Error(`no stroke for series ${JSON.stringify(label)}`);
  return match[1];
}

/** Relative luminance of a CSS color; higher means lighter. */
export function luminance(spec: string): number {
  const parsed = color(spec);
  if (!parsed) throw new Error(`unparseable color ${JSON.stringify(spec)}`);
  const { r, g, b } = parsed.rgb();
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}
