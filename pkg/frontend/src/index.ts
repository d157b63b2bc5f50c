export { parseTrajectory, SchemaError, Trajectory } from "./csv.js";
export type { BandPrefix, TrajectoryShape } from "./csv.js";
export { assertKind, FIGURE_KINDS } from "./figure.js";
export type { FigureKind, FigureSpec } from "./figure.js";
export {
  bandShade,
  COLORS,
  CYCLE,
  INNER_HEIGHT,
  INNER_WIDTH,
  LAYOUT,
  renderFigure,
} from "./render.js";
export { loadTrajectory, render, trajectoryLabel } from "./io.js";
export { main } from "./cli.js";
export type { CliIo } from "./cli.js";
