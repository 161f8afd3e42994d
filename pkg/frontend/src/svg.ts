/** Small deterministic SVG builder.
 *
 * Everything here is pure string assembly: no timestamps, no randomness, so
 * the same inputs always produce byte-identical files.
 */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 640,
  height: 420,
  margin: { top: 28, right: 16, bottom: 42, left: 56 },
};

/** Categorical palette; 14 entries covers the largest vehicle count plotted. */
export const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
  "#8c6d31", "#843c39",
];

export interface LinearScale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  const scale = ((value: number) =>
    span === 0 ? (r0 + r1) / 2 : r0 + ((value - d0) / span) * (r1 - r0)) as LinearScale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isNaN(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) throw new RangeError("extent of empty or all-NaN series");
  return lo === hi ? [lo - 1, hi + 1] : [lo, hi];
}

/** Pad a domain by a fraction on both ends so curves clear the frame edge. */
export function padded(domain: [number, number], fraction = 0.05): [number, number] {
  const pad = (domain[1] - domain[0]) * fraction;
  return [domain[0] - pad, domain[1] + pad];
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  const step = (hi - lo) / (count - 1);
  const out: number[] = [];
  for (let i = 0; i < count; i++) out.push(lo + i * step);
  return out;
}

/** Coordinate formatting: fixed decimals keep files compact and stable. */
export function fmt(value: number): string {
  return value.toFixed(2);
}

export function fmtTick(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1000 || abs < 0.01) return value.toExponential(1);
  return String(Number(value.toPrecision(3)));
}

export function polyline(
  pts: Array<[number, number]>,
  stroke: string,
  width: number,
  extra = "",
): string {
  const coords = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}"${extra} points="${coords}"/>`;
}

export function textEl(
  x: number,
  y: number,
  content: string,
  anchor: "start" | "middle" | "end",
  size = 11,
  extra = "",
): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" text-anchor="${anchor}" font-size="${size}"${extra}>${content}</text>`;
}

/** Left + bottom axes with tick labels; returns the finished markup lines. */
export function axes(
  frame: Frame,
  xScale: LinearScale,
  yScale: LinearScale,
  xLabel: string,
  yLabel: string,
): string[] {
  const { width, height, margin } = frame;
  const lines: string[] = [];
  const axisStyle = 'stroke="#333" stroke-width="1"';
  lines.push(`<line x1="${margin.left}" y1="${height - margin.bottom}" x2="${width - margin.right}" y2="${height - margin.bottom}" ${axisStyle}/>`);
  lines.push(`<line x1="${margin.left}" y1="${margin.top}" x2="${margin.left}" y2="${height - margin.bottom}" ${axisStyle}/>`);
  for (const t of ticks(xScale.domain)) {
    const x = xScale(t);
    lines.push(`<line x1="${fmt(x)}" y1="${height - margin.bottom}" x2="${fmt(x)}" y2="${height - margin.bottom + 4}" ${axisStyle}/>`);
    lines.push(textEl(x, height - margin.bottom + 16, fmtTick(t), "middle"));
  }
  for (const t of ticks(yScale.domain)) {
    const y = yScale(t);
    lines.push(`<line x1="${margin.left - 4}" y1="${fmt(y)}" x2="${margin.left}" y2="${fmt(y)}" ${axisStyle}/>`);
    lines.push(textEl(margin.left - 7, y + 3.5, fmtTick(t), "end"));
  }
  lines.push(textEl(margin.left + (width - margin.left - margin.right) / 2, height - 8, xLabel, "middle", 12));
  lines.push(`<text x="14" y="${fmt(margin.top + (height - margin.top - margin.bottom) / 2)}" text-anchor="middle" font-size="12" transform="rotate(-90 14 ${fmt(margin.top + (height - margin.top - margin.bottom) / 2)})">${yLabel}</text>`);
  return lines;
}

export function document(frame: Frame, body: string[]): string {
  const head = `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}" font-family="sans-serif">`;
  return [head, `<rect width="${frame.width}" height="${frame.height}" fill="white"/>`, ...body, "</svg>", ""].join("\n");
}
