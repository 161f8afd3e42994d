import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { parseMetricsCsv, parseReport, parseTrajectoryCsv } from "../src/parse.js";
import { plotLearningCurve, plotMetricsVsN, plotTrajectories } from "../src/plots.js";
import { projectPerspective, projectTopDown } from "../src/project.js";
import { SchemaError } from "../src/types.js";

const fixture = (name: string): string =>
  readFileSync(new URL(`./fixtures/${name}`, import.meta.url), "utf-8");

function attr(tag: string, name: string): string {
  const m = tag.match(new RegExp(`${name}="([^"]*)"`));
  if (m === null) throw new Error(`attribute ${name} not found in: ${tag.slice(0, 120)}`);
  return m[1]!;
}

describe("plotLearningCurve", () => {
  const rows = parseMetricsCsv(fixture("metrics.csv"));

  it("embeds a moving average that matches hand recomputation at sampled episodes", () => {
    const window = 10;
    const svg = plotLearningCurve(rows, window);
    const tag = svg.match(/<polyline[^>]*data-series="smoothed"[^>]*>/)![0];
    expect(Number(attr(tag, "data-window"))).toBe(window);
    const plotted = attr(tag, "data-values").split(" ").map(Number);
    expect(plotted.length).toBe(rows.length);
    const rewards = rows.map((r) => r.meanReward);
    // Recompute each sampled entry from the raw column, summing in reverse
    // order so this is not just the implementation run twice.
    for (const i of [4, 14, 24, 34, 49]) {
      const slice = rewards.slice(Math.max(0, i - window + 1), i + 1);
      const byHand = slice.reduceRight((acc, v) => acc + v, 0) / slice.length;
      expect(Math.abs(plotted[i]! - byHand)).toBeLessThan(1e-9);
    }
  });

  it("draws raw and smoothed series over the full episode range", () => {
    const svg = plotLearningCurve(rows, 10);
    const episodes = attr(svg.match(/<polyline[^>]*data-series="smoothed"[^>]*>/)![0], "data-episodes")
      .split(" ")
      .map(Number);
    expect(episodes[0]).toBe(0);
    expect(episodes[episodes.length - 1]).toBe(49);
    expect(svg).toContain('data-series="raw"');
  });

  it("is deterministic", () => {
    expect(plotLearningCurve(rows, 5)).toBe(plotLearningCurve(rows, 5));
  });

  it("rejects a log shorter than the window", () => {
    expect(() => plotLearningCurve(rows.slice(0, 3), 10)).toThrow(SchemaError);
  });
});

describe("plotTrajectories", () => {
  const circle = parseTrajectoryCsv(fixture("traj_circle8.csv"));

  it("renders one polyline per vehicle with distinct colors", () => {
    const svg = plotTrajectories([circle], "topdown");
    const tags = svg.match(/<polyline[^>]*data-uav="[^"]*"[^>]*>/g)!;
    expect(tags.length).toBe(8);
    expect(new Set(tags.map((t) => attr(t, "data-uav"))).size).toBe(8);
    expect(new Set(tags.map((t) => attr(t, "stroke"))).size).toBe(8);
  });

  it("drops the z column exactly in the top-down view", () => {
    // Rewrite altitude to arbitrary values; the projection must not notice.
    const lines = fixture("traj_circle8.csv").split("\n");
    const mangled = lines
      .map((line, i) => {
        if (i === 0 || line.length === 0) return line;
        const f = line.split(",");
        f[4] = String(((i * 37) % 17) + 0.125);
        return f.join(",");
      })
      .join("\n");
    const original = plotTrajectories([circle], "topdown");
    const rewritten = plotTrajectories([parseTrajectoryCsv(mangled)], "topdown");
    expect(rewritten).toBe(original);
    // The same rewrite must change the perspective view, which uses z.
    expect(plotTrajectories([parseTrajectoryCsv(mangled)], "3d")).not.toBe(
      plotTrajectories([circle], "3d"),
    );
  });

  it("keeps antipodal circle trajectories point-symmetric about the center", () => {
    const byUav = new Map<number, Array<[number, number, number]>>();
    for (const p of circle) {
      const path = byUav.get(p.uavId) ?? [];
      path.push([p.x, p.y, p.z]);
      byUav.set(p.uavId, path);
    }
    for (let i = 0; i < 4; i++) {
      const a = byUav.get(i)!;
      const b = byUav.get(i + 4)!;
      for (const t of [0, 25, 54]) {
        expect(Math.abs(a[t]![0] + b[t]![0])).toBeLessThan(1e-9);
        expect(Math.abs(a[t]![1] + b[t]![1])).toBeLessThan(1e-9);
        expect(Math.abs(a[t]![2] - b[t]![2])).toBeLessThan(1e-9);
      }
    }
  });

  it("is deterministic", () => {
    expect(plotTrajectories([circle], "3d")).toBe(plotTrajectories([circle], "3d"));
  });

  it("rejects empty input", () => {
    expect(() => plotTrajectories([], "topdown")).toThrow(SchemaError);
  });
});

describe("projections", () => {
  it("top-down keeps x and y bit-for-bit and ignores z", () => {
    const [x, y] = projectTopDown({ x: 1.5, y: -2.25, z: 7.875 });
    expect(x).toBe(1.5);
    expect(y).toBe(-2.25);
    expect(projectTopDown({ x: 0.1, y: 0.2, z: -3 })).toEqual(projectTopDown({ x: 0.1, y: 0.2, z: 12 }));
  });

  it("perspective maps a straight 3D path to a straight 2D segment", () => {
    const pts = [0, 1, 2].map((t) => projectPerspective({ x: 1 + 2 * t, y: -3 + t, z: 2 + 0.5 * t }));
    const [p0, p1, p2] = pts;
    const cross =
      (p1![0] - p0![0]) * (p2![1] - p0![1]) - (p1![1] - p0![1]) * (p2![0] - p0![0]);
    expect(Math.abs(cross)).toBeLessThan(1e-9);
  });
});

describe("plotMetricsVsN", () => {
  const reports = [8, 10, 12, 14].map((n) => parseReport(fixture(`report_n${n}.json`)));

  it("renders four bars per metric panel with exact input values", () => {
    const svg = plotMetricsVsN(reports);
    const bars = svg.match(/<rect[^>]*data-metric="[^"]*"[^>]*>/g)!;
    expect(bars.length).toBe(16);
    const raw = [8, 10, 12, 14].map(
      (n) => JSON.parse(fixture(`report_n${n}.json`)) as Record<string, number>,
    );
    for (const bar of bars) {
      const n = Number(attr(bar, "data-n"));
      const source = raw[[8, 10, 12, 14].indexOf(n)]!;
      const key = attr(bar, "data-metric");
      const jsonKey = {
        successRate: "success_rate",
        spl: "spl",
        extraDistanceMean: "extra_distance_mean",
        averageSpeedMean: "average_speed_mean",
      }[key]!;
      expect(attr(bar, "data-value")).toBe(String(source[jsonKey]));
    }
  });

  it("rejects duplicate vehicle counts", () => {
    expect(() => plotMetricsVsN([reports[0]!, reports[0]!])).toThrow(SchemaError);
  });
});
