/** Parsers for the primary package's export files.
 *
 * The inputs are machine-written with fixed headers and no quoting, so a
 * strict line splitter is enough; any header drift is a schema error rather
 * than something to paper over.
 */

import { EvalReport, MetricsRow, SchemaError, TrajectoryPoint } from "./types.js";

const METRICS_HEADER = "episode,env_steps,mean_reward,j_q,j_pi,j_rae,alpha";
const TRAJECTORY_HEADER = "time_step,uav_id,x,y,z,yaw,status";

function splitLines(text: string): string[] {
  return text.split(/\r?\n/).filter((line) => line.length > 0);
}

/** Parse a numeric field; the logs spell missing values as a literal "nan". */
function toNumber(field: string, line: string): number {
  if (field === "nan") return NaN;
  const value = Number(field);
  if (field === "" || Number.isNaN(value)) {
    throw new SchemaError(`non-numeric field ${JSON.stringify(field)} in line: ${line}`);
  }
  return value;
}

export function parseMetricsCsv(text: string): MetricsRow[] {
  const lines = splitLines(text);
  if (lines[0] !== METRICS_HEADER) {
    throw new SchemaError(`bad metrics header: ${JSON.stringify(lines[0] ?? "")}`);
  }
  return lines.slice(1).map((line) => {
    const f = line.split(",");
    if (f.length !== 7) throw new SchemaError(`expected 7 fields, got ${f.length}: ${line}`);
    return {
      episode: toNumber(f[0]!, line),
      envSteps: toNumber(f[1]!, line),
      meanReward: toNumber(f[2]!, line),
      jQ: toNumber(f[3]!, line),
      jPi: toNumber(f[4]!, line),
      jRae: toNumber(f[5]!, line),
      alpha: toNumber(f[6]!, line),
    };
  });
}

export function parseTrajectoryCsv(text: string): TrajectoryPoint[] {
  const lines = splitLines(text);
  if (lines[0] !== TRAJECTORY_HEADER) {
    throw new SchemaError(`bad trajectory header: ${JSON.stringify(lines[0] ?? "")}`);
  }
  const points = lines.slice(1).map((line) => {
    const f = line.split(",");
    if (f.length !== 7) throw new SchemaError(`expected 7 fields, got ${f.length}: ${line}`);
    return {
      timeStep: toNumber(f[0]!, line),
      uavId: toNumber(f[1]!, line),
      x: toNumber(f[2]!, line),
      y: toNumber(f[3]!, line),
      z: toNumber(f[4]!, line),
      yaw: toNumber(f[5]!, line),
      status: f[6]!,
    };
  });
  if (points.length === 0) throw new SchemaError("trajectory file has no data rows");
  return points;
}

/** Group trajectory points by vehicle, preserving time order within each. */
export function groupByUav(points: TrajectoryPoint[]): Map<number, TrajectoryPoint[]> {
  const groups = new Map<number, TrajectoryPoint[]>();
  for (const p of points) {
    const bucket = groups.get(p.uavId);
    if (bucket === undefined) groups.set(p.uavId, [p]);
    else bucket.push(p);
  }
  return groups;
}

const REPORT_FIELDS = [
  "success_rate",
  "spl",
  "extra_distance_mean",
  "extra_distance_std",
  "average_speed_mean",
  "average_speed_std",
  "n_uavs",
  "n_episodes",
] as const;

export function parseReport(text: string): EvalReport {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`report is not valid JSON: ${String(err)}`);
  }
  if (typeof raw !== "object" || raw === null) throw new SchemaError("report is not an object");
  const record = raw as Record<string, unknown>;
  for (const field of REPORT_FIELDS) {
    if (typeof record[field] !== "number") {
      throw new SchemaError(`report field ${field} missing or non-numeric`);
    }
  }
  return {
    successRate: record.success_rate as number,
    spl: record.spl as number,
    extraDistanceMean: record.extra_distance_mean as number,
    extraDistanceStd: record.extra_distance_std as number,
    averageSpeedMean: record.average_speed_mean as number,
    averageSpeedStd: record.average_speed_std as number,
    nUavs: record.n_uavs as number,
    nEpisodes: record.n_episodes as number,
  };
}
