/** Figure specification shared by the library API and the CLI. */

import { SchemaError } from "./csv.js";

export const FIGURE_KINDS = [
  "trajectory",
  "stacked-bands",
  "contact-rates",
  "theta-sweep",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  /** Layout to draw; see FIGURE_KINDS. */
  kind: FigureKind;
  /** Trajectory CSV paths, in drawing order. */
  inputs: string[];
  /** Destination path for the rendered SVG image. */
  output: string;
}

export function assertKind(value: string): FigureKind {
  if ((FIGURE_KINDS as readonly string[]).includes(value)) {
    return value as FigureKind;
  }
  throw new SchemaError(
    `unknown figure kind "${value}" (expected one of: ${FIGURE_KINDS.join(", ")})`,
  );
}
