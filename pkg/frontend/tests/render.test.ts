import { describe, expect, it } from "vitest";

import { parseTrajectory, SchemaError, Trajectory } from "../src/csv.js";
import {
  bandShade,
  INNER_WIDTH,
  renderFigure,
} from "../src/render.js";
import {
  bandFills,
  luminance,
  refText,
  seriesLabels,
  seriesPath,
  strokeOf,
  verticalSegments,
} from "./helpers.js";

function load(scenario: string): Trajectory {
  return parseTrajectory(refText(scenario), scenario);
}

const round2 = (v: number): number => Math.round(v * 100) / 100;

describe("trajectory figures", () => {
  const mfg = load("fig1-mfg");
  const myopic = load("fig1-myopic");

  it("draws two panels with solid and dashed model curves", () => {
    const svg = renderFigure("trajectory", [mfg, myopic]);
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.match(/class="panel"/g)).toHaveLength(2);
    for (const name of ["S", "I", "R"]) {
      expect(seriesLabels(svg)).toContain(`${name} — fig1-mfg`);
      expect(seriesLabels(svg)).toContain(`${name} — fig1-myopic`);
    }
    expect(svg).toContain('data-series="c_S — fig1-mfg"');
    const dashed = svg.match(/stroke-dasharray="6 4"/g) ?? [];
    expect(dashed.length).toBeGreaterThanOrEqual(4);
    expect(svg).not.toContain("NaN");
  });

  it("uses plain labels for a single input", () => {
    const svg = renderFigure("trajectory", [mfg]);
    expect(seriesLabels(svg)).toEqual(["S", "I", "R", "c_S"]);
    expect(strokeOf(svg, "I")).toBe("#d62728");
    expect(strokeOf(svg, "S")).toBe("#2ca02c");
    expect(strokeOf(svg, "R")).toBe("#1f77b4");
  });

  it("is deterministic", () => {
    const first = renderFigure("trajectory", [mfg, myopic]);
    const second = renderFigure("trajectory", [mfg, myopic]);
    expect(second).toBe(first);
  });

  it("rejects more than two inputs", () => {
    expect(() => renderFigure("trajectory", [mfg, myopic, mfg])).toThrow(
      SchemaError,
    );
  });

  it("renders an all-zero infection curve without crashing", () => {
    const rows = [0, 1, 2, 3].map((t) => `${t},1,0,0,0,0,0,0,0`);
    const flat = parseTrajectory(`t,S,I,R,D,V_S,V_I,V_R,c_S\n${rows.join("\n")}\n`, "flat");
    const svg = renderFigure("trajectory", [flat]);
    expect(svg).toContain('data-series="I"');
    expect(svg).not.toContain("NaN");
  });
});

describe("stacked-band figures", () => {
  const waning = load("fig2a-waning");
  const svg = renderFigure("stacked-bands", [waning]);

  it("stacks one area per band, darkest lowest-p first", () => {
    const fills = bandFills(svg);
    expect(fills).toHaveLength(9);
    expect(fills[0]).toBe(bandShade(0, 8));
    const lums = fills.map(luminance);
    for (let j = 1; j < lums.length; j += 1) {
      expect(lums[j]).toBeGreaterThan(lums[j - 1]);
    }
  });

  it("overlays the infected curve in red on the band panel", () => {
    expect(strokeOf(svg, "I")).toBe("#d62728");
    const overlay = svg.indexOf('data-series="I"');
    expect(overlay).toBeGreaterThan(svg.lastIndexOf('class="band"'));
    expect(overlay).toBeLessThan(svg.indexOf('data-series="c_0"'));
  });

  it("draws per-band contact rates in the matching shades", () => {
    for (let j = 0; j < 9; j += 1) {
      expect(strokeOf(svg, `c_${j}`)).toBe(bandShade(j, 8));
    }
  });

  it("labels bands by their immunity level", () => {
    expect(svg).toContain("p ≈ 0<");
    expect(svg).toContain("p ≈ 0.125");
    expect(svg).toContain("p ≈ 1<");
  });

  it("rejects scalar inputs and wrong input counts", () => {
    const scalar = load("fig1-mfg");
    expect(() => renderFigure("stacked-bands", [scalar])).toThrow(
      /requires a structured trajectory/,
    );
    expect(() => renderFigure("stacked-bands", [waning, waning])).toThrow(
      /exactly one input/,
    );
  });
});

describe("horizon-jump discontinuities", () => {
  it("draws contact-rate jumps as vertical segments at the event times", () => {
    const horizon = load("fig4-belief-horizon");
    const svg = renderFigure("stacked-bands", [horizon]);
    const t1 = horizon.t[horizon.length - 1];
    const jumps = verticalSegments(seriesPath(svg, "c_0"), 5);
    expect(jumps).toHaveLength(4);
    const xs = jumps.map((j) => j.x);
    const expected = [50, 100, 200, 285].map((t) => round2((t / t1) * INNER_WIDTH));
    expect(xs).toEqual(expected);
    for (const jump of jumps) {
      expect(jump.dy).toBeLessThan(0);
    }
  });

  it("keeps the top band of the stack at the total noninfected mass", () => {
    const horizon = load("fig4-belief-horizon");
    const svg = renderFigure("stacked-bands", [horizon]);
    expect(bandFills(svg)).toHaveLength(5);
    expect(svg).not.toContain("NaN");
  });
});

describe("theta-sweep figures", () => {
  const members = ["fig3-theta-0.1", "fig3-theta-0.5", "fig3-theta-0.9"].map(load);
  const svg = renderFigure("theta-sweep", members);

  it("draws one infection and one contact-rate curve per member", () => {
    const labels = seriesLabels(svg);
    for (const member of members) {
      expect(labels).toContain(`I — ${member.source}`);
      expect(labels).toContain(`c_S — ${member.source}`);
    }
    const strokes = members.map((m) => strokeOf(svg, `I — ${m.source}`));
    expect(new Set(strokes).size).toBe(3);
  });

  it("shows the contact-rate discontinuity at the early horizon", () => {
    const expectedX = round2((150 / 300) * INNER_WIDTH);
    for (const member of members) {
      const jumps = verticalSegments(seriesPath(svg, `c_S — ${member.source}`), 5);
      expect(jumps).toHaveLength(1);
      expect(jumps[0].x).toBe(expectedX);
      expect(jumps[0].dy).toBeLessThan(0);
    }
  });

  it("rejects structured members and singleton sweeps", () => {
    const structured = load("fig2a-waning");
    expect(() => renderFigure("theta-sweep", [members[0], structured])).toThrow(
      /expects scalar trajectories/,
    );
    expect(() => renderFigure("theta-sweep", [members[0]])).toThrow(
      /at least two inputs/,
    );
  });
});

describe("contact-rate figures", () => {
  it("draws a single panel with one curve per scalar input", () => {
    const svg = renderFigure("contact-rates", [load("fig1-mfg"), load("fig1-myopic")]);
    expect(svg.match(/class="panel"/g)).toHaveLength(1);
    expect(seriesLabels(svg)).toEqual(["c_S — fig1-mfg", "c_S — fig1-myopic"]);
  });

  it("expands structured inputs into per-band curves", () => {
    const svg = renderFigure("contact-rates", [load("fig2b-belief")]);
    expect(seriesLabels(svg)).toEqual(
      Array.from({ length: 9 }, (_, j) => `c_${j}`),
    );
  });

  it("needs at least one input", () => {
    expect(() => renderFigure("contact-rates", [])).toThrow(/at least one input/);
  });
});
