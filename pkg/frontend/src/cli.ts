/**
 * Command-line interface.
 *
 * Exit codes: 0 success, 1 usage error, 2 unreadable input or schema mismatch.
 */

import { parseArgs } from "node:util";

import { SchemaError } from "./csv.js";
import { assertKind, FIGURE_KINDS, type FigureSpec } from "./figure.js";
import { render } from "./io.js";

const USAGE = `usage: epimfg-figures --kind KIND --input CSV [--input CSV ...] --out FILE

Render an SVG figure from epimfg trajectory CSV files.

options:
  --kind KIND    figure layout: ${FIGURE_KINDS.join(", ")}
  --input CSV    trajectory CSV path (repeat for multi-input figures)
  --out FILE     output SVG path
  --help         show this message and exit

exit codes: 0 success, 1 usage error, 2 unreadable input or schema mismatch
`;

export interface CliIo {
  out(text: string): void;
  err(text: string): void;
}

const processIo: CliIo = {
  out: (text) => process.stdout.write(text),
  err: (text) => process.stderr.write(text),
};

export function main(argv: string[], io: CliIo = processIo): number {
  let values: { input?: string[]; kind?: string; out?: string; help?: boolean };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        input: { type: "string", multiple: true },
        kind: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean" },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    io.err(`error: ${(err as Error).message}\n${USAGE}`);
    return 1;
  }
  if (values.help) {
    io.out(USAGE);
    return 0;
  }
  if (!values.input?.length || !values.kind || !values.out) {
    io.err(`error: --kind, --input, and --out are all required\n${USAGE}`);
    return 1;
  }

  let spec: FigureSpec;
  try {
    spec = { kind: assertKind(values.kind), inputs: values.input, output: values.out };
  } catch (err) {
    io.err(`error: ${(err as Error).message}\n${USAGE}`);
    return 1;
  }

  try {
    const written = render(spec);
    io.out(`wrote ${written}\n`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      io.err(`error: ${err.message}\n`);
    } else {
      io.err(`error: ${(err as Error).message}\n`);
    }
    return 2;
  }
}
