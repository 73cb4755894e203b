#!/usr/bin/env node
/**
 * Command line entry point.
 *
 *   spikebench-plots scaling --input scale.csv --output scaling.svg
 *   spikebench-plots phases  --input scale.csv --output phases.svg
 *   spikebench-plots power   --input trace.csv --baseline 100 --output power.svg
 *
 * The power figure can also take --energy-json to pull the fitted
 * baseline out of an energy analysis report instead of --baseline.
 */

import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { SchemaError, loadBaseline, loadScaleCsv, loadTraceCsv } from "./csv.js";
import { renderPhases } from "./phases.js";
import { renderPower } from "./power.js";
import { renderScaling } from "./scaling.js";

const USAGE = `usage: spikebench-plots <scaling|phases|power> --input FILE --output FILE
  scaling: --linear-x --linear-y --title TEXT
  phases:  --title TEXT
  power:   --baseline WATTS | --energy-json FILE, --linear-time --title TEXT`;

function fail(message: string): number {
  process.stderr.write(`error: ${message}\n`);
  return 1;
}

export function main(argv: string[]): number {
  const command = argv[0];
  if (command === undefined || command === "--help" || command === "-h") {
    process.stderr.write(USAGE + "\n");
    return command === undefined ? 2 : 0;
  }
  if (command !== "scaling" && command !== "phases" && command !== "power") {
    return fail(`unknown command ${JSON.stringify(command)}\n${USAGE}`);
  }

  let values: Record<string, string | boolean | undefined>;
  try {
    ({ values } = parseArgs({
      args: argv.slice(1),
      options: {
        input: { type: "string" },
        output: { type: "string" },
        title: { type: "string" },
        baseline: { type: "string" },
        "energy-json": { type: "string" },
        "linear-x": { type: "boolean" },
        "linear-y": { type: "boolean" },
        "linear-time": { type: "boolean" },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    return fail((err as Error).message);
  }

  const input = values["input"];
  const output = values["output"];
  if (typeof input !== "string") return fail("--input is required");
  if (typeof output !== "string") return fail("--output is required");
  const title = typeof values["title"] === "string" ? values["title"] : undefined;

  try {
    let svg: string;
    if (command === "scaling") {
      const rows = loadScaleCsv(input);
      svg = renderScaling(rows, {
        logX: values["linear-x"] ? false : true,
        logY: values["linear-y"] ? false : true,
        ...(title !== undefined ? { title } : {}),
      });
    } else if (command === "phases") {
      const rows = loadScaleCsv(input);
      svg = renderPhases(rows, title !== undefined ? { title } : {});
    } else {
      let baseline: number;
      if (typeof values["baseline"] === "string") {
        baseline = Number(values["baseline"]);
        if (!Number.isFinite(baseline)) {
          return fail(`--baseline must be a number, got ${JSON.stringify(values["baseline"])}`);
        }
      } else if (typeof values["energy-json"] === "string") {
        baseline = loadBaseline(values["energy-json"]);
      } else {
        return fail("power needs --baseline or --energy-json");
      }
      const points = loadTraceCsv(input);
      svg = renderPower(points, {
        baseline,
        logTime: values["linear-time"] ? false : true,
        ...(title !== undefined ? { title } : {}),
      });
    }
    writeFileSync(output, svg + "\n");
  } catch (err) {
    if (err instanceof SchemaError || err instanceof RangeError) {
      return fail(err.message);
    }
    if ((err as NodeJS.ErrnoException).code === "ENOENT") {
      return fail(`cannot read ${(err as NodeJS.ErrnoException).path}`);
    }
    throw err;
  }
  return 0;
}

// run directly only when invoked as a script, not when imported by tests
if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
