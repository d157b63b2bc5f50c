/**
 * Parsing and validation of trajectory CSV files produced by the epimfg CLI.
 *
 * Two column layouts exist.  Scalar models use
 *
 *     t,S,I,R,D,V_S,V_I,V_R,c_S
 *
 * and immunity-structured models with m+1 bands use
 *
 *     t,N_0,...,N_m,I,D,V_0,...,V_m,V_I,c_0,...,c_m
 *
 * where the band count is inferred from the header.  Time is non-decreasing;
 * duplicated time values mark jump discontinuities at possible early
 * termination times and are preserved so that renderers draw the jump as a
 * vertical segment.
 */

/** Raised when a CSV file does not match the trajectory contract. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

export type TrajectoryShape = "scalar" | "structured";

export type BandPrefix = "N" | "V" | "c";

const SCALAR_HEADER: readonly string[] = [
  "t",
  "S",
  "I",
  "R",
  "D",
  "V_S",
  "V_I",
  "V_R",
  "c_S",
];

function structuredHeader(m: number): string[] {
  const indices = Array.from({ length: m + 1 }, (_, j) => j);
  return [
    "t",
    ...indices.map((j) => `N_${j}`),
    "I",
    "D",
    ...indices.map((j) => `V_${j}`),
    "V_I",
    ...indices.map((j) => `c_${j}`),
  ];
}

/** A parsed trajectory table with columnar access. */
export class Trajectory {
  /** Short label used in figure titles, legends, and error messages. */
  readonly source: string;
  readonly shape: TrajectoryShape;
  /** Highest band index for structured trajectories, null for scalar ones. */
  readonly m: number | null;
  readonly header: readonly string[];
  private readonly data: Map<string, Float64Array>;

  constructor(
    source: string,
    shape: TrajectoryShape,
    m: number | null,
    header: readonly string[],
    data: Map<string, Float64Array>,
  ) {
    this.source = source;
    this.shape = shape;
    this.m = m;
    this.header = header;
    this.data = data;
  }

  get t(): Float64Array {
    return this.column("t");
  }

  get length(): number {
    return this.t.length;
  }

  /** Number of immunity bands (0 for scalar trajectories). */
  get bandCount(): number {
    return this.m === null ? 0 : this.m + 1;
  }

  column(name: string): Float64Array {
    const values = this.data.get(name);
    if (values === undefined) {
      throw new SchemaError(
        `${this.source}: no column "${name}" (columns are ${this.header.join(", ")})`,
      );
    }
    return values;
  }

  /** All band columns for a prefix, ordered from band 0 (p near 0) upward. */
  bandColumns(prefix: BandPrefix): Float64Array[] {
    if (this.m === null) {
      throw new SchemaError(
        `${this.source}: scalar trajectory has no "${prefix}_j" band columns`,
      );
    }
    return Array.from({ length: this.m + 1 }, (_, j) =>
      this.column(`${prefix}_${j}`),
    );
  }
}

function inferLayout(
  source: string,
  header: string[],
): { shape: TrajectoryShape; m: number | null } {
  if (
    header.length === SCALAR_HEADER.length &&
    header.every((name, k) => name === SCALAR_HEADER[k])
  ) {
    return { shape: "scalar", m: null };
  }
  if (header[0] === "t" && header[1] === "N_0") {
    let m = 0;
    while (1 + m + 1 < header.length && header[1 + m + 1] === `N_${m + 1}`) {
      m += 1;
    }
    const expected = structuredHeader(m);
    if (header.length !== expected.length) {
      throw new SchemaError(
        `${source}: header has ${header.length} columns, expected ` +
          `${expected.length} for a structured trajectory with ${m + 1} bands`,
      );
    }
    for (let k = 0; k < expected.length; k += 1) {
      if (header[k] !== expected[k]) {
        throw new SchemaError(
          `${source}: expected column ${k + 1} to be "${expected[k]}", ` +
            `found "${header[k]}"`,
        );
      }
    }
    return { shape: "structured", m };
  }
  throw new SchemaError(
    `${source}: unrecognized header "${header.slice(0, 5).join(",")}${
      header.length > 5 ? ",..." : ""
    }"; expected "${SCALAR_HEADER.join(",")}" or "t,N_0,...,N_m,I,D,V_0,...,V_m,V_I,c_0,...,c_m"`,
  );
}

/**
 * Parse trajectory CSV text.  `source` labels the data in error messages and
 * figure legends.  Throws SchemaError on any deviation from the contract:
 * unknown header layout, ragged rows, non-numeric cells, or decreasing time.
 */
export function parseTrajectory(text: string, source = "trajectory"): Trajectory {
  const lines = text.split(/\r?\n/);
  while (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  const header = lines[0].split(",");
  const { shape, m } = inferLayout(source, header);
  if (lines.length === 1) {
    throw new SchemaError(`${source}: no data rows`);
  }

  const n = lines.length - 1;
  const columns = header.map(() => new Float64Array(n));
  for (let i = 0; i < n; i += 1) {
    const cells = lines[i + 1].split(",");
    if (cells.length !== header.length) {
      throw new SchemaError(
        `${source}: line ${i + 2} has ${cells.length} fields, expected ${header.length}`,
      );
    }
    for (let k = 0; k < cells.length; k += 1) {
      const value = Number(cells[k]);
      if (cells[k].trim() === "" || !Number.isFinite(value)) {
        throw new SchemaError(
          `${source}: line ${i + 2}, column "${header[k]}": ` +
            `cannot parse "${cells[k]}" as a finite number`,
        );
      }
      columns[k][i] = value;
    }
  }

  const data = new Map<string, Float64Array>();
  header.forEach((name, k) => data.set(name, columns[k]));
  const t = data.get("t")!;
  for (let i = 1; i < n; i += 1) {
    if (t[i] < t[i - 1]) {
      throw new SchemaError(`${source}: time column decreases at line ${i + 2}`);
    }
  }
  return new Trajectory(source, shape, m, header, data);
}
