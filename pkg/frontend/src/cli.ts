#!/usr/bin/env node
/** Command line entry: read export files, write SVG figures. */

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";
import { parseMetricsCsv, parseReport, parseTrajectoryCsv } from "./parse.js";
import { plotLearningCurve, plotMetricsVsN, plotTrajectories, TrajectoryView } from "./plots.js";

const USAGE = `usage:
  uavnav-plots learning-curve --metrics metrics.csv --out fig.svg [--window 10]
  uavnav-plots trajectories --view topdown|3d --out fig.svg traj_ep0.csv [...]
  uavnav-plots metrics-vs-n --out fig.svg report_a.json report_b.json [...]`;

function fail(message: string): never {
  console.error(message);
  console.error(USAGE);
  process.exit(2);
}

export function main(argv: string[]): void {
  const command = argv[0];
  const rest = argv.slice(1);
  let svg: string;
  let out: string;
  if (command === "learning-curve") {
    const { values } = parseArgs({
      args: rest,
      options: {
        metrics: { type: "string" },
        out: { type: "string" },
        window: { type: "string", default: "10" },
      },
    });
    if (values.metrics === undefined || values.out === undefined) fail("missing --metrics or --out");
    const window = Number(values.window);
    svg = plotLearningCurve(parseMetricsCsv(readFileSync(values.metrics, "utf-8")), window);
    out = values.out;
  } else if (command === "trajectories") {
    const { values, positionals } = parseArgs({
      args: rest,
      options: {
        view: { type: "string", default: "topdown" },
        out: { type: "string" },
      },
      allowPositionals: true,
    });
    if (values.out === undefined) fail("missing --out");
    if (positionals.length === 0) fail("no trajectory files given");
    if (values.view !== "topdown" && values.view !== "3d") fail(`bad --view ${values.view}`);
    const files = positionals.map((p) => parseTrajectoryCsv(readFileSync(p, "utf-8")));
    svg = plotTrajectories(files, values.view as TrajectoryView);
    out = values.out;
  } else if (command === "metrics-vs-n") {
    const { values, positionals } = parseArgs({
      args: rest,
      options: { out: { type: "string" } },
      allowPositionals: true,
    });
    if (values.out === undefined) fail("missing --out");
    if (positionals.length === 0) fail("no report files given");
    svg = plotMetricsVsN(positionals.map((p) => parseReport(readFileSync(p, "utf-8"))));
    out = values.out;
  } else {
    fail(command === undefined ? "no command given" : `unknown command ${command}`);
  }
  writeFileSync(out, svg);
  console.log(`wrote ${out}`);
}

const entry = process.argv[1];
if (entry !== undefined && import.meta.url === pathToFileURL(entry).href) {
  main(process.argv.slice(2));
}
