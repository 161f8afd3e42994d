/** Figure builders: parsed records in, finished SVG markup out.
 *
 * Each builder embeds the exact plotted numbers in data-* attributes (via
 * String(), which round-trips doubles), so tests and downstream tools can
 * audit a figure without re-deriving anything from pixel coordinates.
 */

import { groupByUav } from "./parse.js";
import { projectPerspective, projectTopDown } from "./project.js";
import { movingAverage } from "./series.js";
import {
  DEFAULT_FRAME,
  Frame,
  PALETTE,
  axes,
  document,
  extent,
  fmt,
  linearScale,
  padded,
  polyline,
  textEl,
} from "./svg.js";
import { EvalReport, MetricsRow, SchemaError, TrajectoryPoint } from "./types.js";

export function plotLearningCurve(rows: MetricsRow[], window: number): string {
  if (rows.length < window) {
    throw new SchemaError(`log has ${rows.length} rows, fewer than window ${window}`);
  }
  const frame = DEFAULT_FRAME;
  const episodes = rows.map((r) => r.episode);
  const rewards = rows.map((r) => r.meanReward);
  const smoothed = movingAverage(rewards, window);
  const xScale = linearScale(extent(episodes), [frame.margin.left, frame.width - frame.margin.right]);
  const yScale = linearScale(padded(extent(rewards.concat(smoothed))), [
    frame.height - frame.margin.bottom,
    frame.margin.top,
  ]);
  const toPoints = (ys: number[]): Array<[number, number]> =>
    ys.map((y, i) => [xScale(episodes[i]!), yScale(y)]);
  const body = [
    ...axes(frame, xScale, yScale, "episode", "mean episode reward"),
    polyline(toPoints(rewards), "#b0c4de", 1, ' data-series="raw"'),
    polyline(
      toPoints(smoothed),
      PALETTE[0]!,
      2,
      ` data-series="smoothed" data-window="${window}"` +
        ` data-episodes="${episodes.map(String).join(" ")}"` +
        ` data-values="${smoothed.map(String).join(" ")}"`,
    ),
    textEl(frame.width / 2, 18, `training reward (moving average, window ${window})`, "middle", 13),
  ];
  return document(frame, body);
}

export type TrajectoryView = "topdown" | "3d";

/**
 * Paths of every vehicle in one or more episode exports, one polyline per
 * vehicle per episode, colored by vehicle so repeats share a hue. Spatial
 * axes keep a common scale so geometry is not distorted.
 */
export function plotTrajectories(files: TrajectoryPoint[][], view: TrajectoryView): string {
  if (files.length === 0) throw new SchemaError("no trajectory files given");
  const frame: Frame = { ...DEFAULT_FRAME, width: 560, height: 560 };
  const project = view === "topdown" ? projectTopDown : projectPerspective;
  const paths: Array<{ uavId: number; pts: Array<[number, number]> }> = [];
  for (const points of files) {
    for (const [uavId, group] of [...groupByUav(points).entries()].sort((a, b) => a[0] - b[0])) {
      paths.push({ uavId, pts: group.map((p) => project(p)) });
    }
  }
  const allX = paths.flatMap((p) => p.pts.map(([x]) => x));
  const allY = paths.flatMap((p) => p.pts.map(([, y]) => y));
  const [xLo, xHi] = padded(extent(allX));
  const [yLo, yHi] = padded(extent(allY));
  const plotW = frame.width - frame.margin.left - frame.margin.right;
  const plotH = frame.height - frame.margin.top - frame.margin.bottom;
  // One scale factor for both axes keeps circles circular.
  const unitsPerPx = Math.max((xHi - xLo) / plotW, (yHi - yLo) / plotH);
  const xMid = (xLo + xHi) / 2;
  const yMid = (yLo + yHi) / 2;
  const xScale = linearScale(
    [xMid - (unitsPerPx * plotW) / 2, xMid + (unitsPerPx * plotW) / 2],
    [frame.margin.left, frame.width - frame.margin.right],
  );
  const yScale = linearScale(
    [yMid - (unitsPerPx * plotH) / 2, yMid + (unitsPerPx * plotH) / 2],
    [frame.height - frame.margin.bottom, frame.margin.top],
  );
  const xLabel = view === "topdown" ? "x [m]" : "view x";
  const yLabel = view === "topdown" ? "y [m]" : "view y";
  const body = [...axes(frame, xScale, yScale, xLabel, yLabel)];
  for (const { uavId, pts } of paths) {
    const mapped = pts.map(([x, y]) => [xScale(x), yScale(y)] as [number, number]);
    const color = PALETTE[uavId % PALETTE.length]!;
    body.push(polyline(mapped, color, 1.5, ` data-uav="${uavId}"`));
    const start = mapped[0]!;
    body.push(`<circle cx="${fmt(start[0])}" cy="${fmt(start[1])}" r="3" fill="${color}"/>`);
  }
  const title = view === "topdown" ? "trajectories (top-down)" : "trajectories (perspective)";
  body.push(textEl(frame.width / 2, 18, title, "middle", 13));
  return document(frame, body);
}

const METRIC_COLUMNS = [
  { key: "successRate", label: "success rate" },
  { key: "spl", label: "SPL" },
  { key: "extraDistanceMean", label: "extra distance [m]" },
  { key: "averageSpeedMean", label: "average speed [m/s]" },
] as const;

/** One bar panel per metric, bars indexed by vehicle count. */
export function plotMetricsVsN(reports: EvalReport[]): string {
  if (reports.length === 0) throw new SchemaError("no reports given");
  const ns = reports.map((r) => r.nUavs);
  if (new Set(ns).size !== ns.length) throw new SchemaError("duplicate vehicle counts in reports");
  const ordered = [...reports].sort((a, b) => a.nUavs - b.nUavs);
  const frame: Frame = { width: 720, height: 520, margin: { top: 30, right: 10, bottom: 10, left: 10 } };
  const panelW = 340;
  const panelH = 230;
  const body: string[] = [];
  METRIC_COLUMNS.forEach((metric, m) => {
    const x0 = 20 + (m % 2) * (panelW + 20);
    const y0 = 40 + Math.floor(m / 2) * (panelH + 20);
    const values = ordered.map((r) => r[metric.key]);
    const finite = values.map((v) => (Number.isFinite(v) ? v : 0));
    // Bars hang from a zero line, so negative values (possible for the
    // signed extra-distance metric) stay valid geometry.
    const hi = Math.max(...finite, 0) * 1.1 || 1;
    const lo = Math.min(...finite, 0) * 1.1;
    const innerH = panelH - 50;
    const yOf = (v: number): number => y0 + 20 + ((hi - v) / (hi - lo)) * innerH;
    const zeroY = yOf(0);
    const barW = (panelW - 60) / ordered.length;
    body.push(textEl(x0 + panelW / 2, y0 + 12, metric.label, "middle", 12));
    body.push(`<line x1="${x0 + 30}" y1="${fmt(zeroY)}" x2="${x0 + panelW - 30}" y2="${fmt(zeroY)}" stroke="#333" stroke-width="1"/>`);
    ordered.forEach((report, i) => {
      const vy = yOf(finite[i]!);
      const bx = x0 + 30 + i * barW + barW * 0.15;
      body.push(
        `<rect x="${fmt(bx)}" y="${fmt(Math.min(vy, zeroY))}" width="${fmt(barW * 0.7)}" ` +
          `height="${fmt(Math.abs(vy - zeroY))}" ` +
          `fill="${PALETTE[i % PALETTE.length]}" data-metric="${metric.key}" ` +
          `data-n="${report.nUavs}" data-value="${String(values[i])}"/>`,
      );
      body.push(textEl(bx + barW * 0.35, y0 + 20 + innerH + 14, `N=${report.nUavs}`, "middle", 10));
      const labelY = finite[i]! < 0 ? vy + 11 : vy - 3;
      body.push(textEl(bx + barW * 0.35, labelY, fmtBar(values[i]!), "middle", 9));
    });
  });
  body.push(textEl(frame.width / 2, 20, "evaluation metrics by vehicle count", "middle", 13));
  return document(frame, body);
}

function fmtBar(value: number): string {
  if (!Number.isFinite(value)) return "n/a";
  return String(Number(value.toPrecision(3)));
}
