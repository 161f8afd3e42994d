/** Series smoothing for learning curves. */

/**
 * Trailing moving average: entry i averages the last min(i + 1, window)
 * values, so the series starts immediately instead of after a warm-up gap
 * and window 1 reproduces the input.
 */
export function movingAverage(values: number[], window: number): number[] {
  if (!Number.isInteger(window) || window < 1) {
    throw new RangeError(`window must be a positive integer, got ${window}`);
  }
  return values.map((_, i) => {
    const start = Math.max(0, i - window + 1);
    let sum = 0;
    for (let j = start; j <= i; j++) sum += values[j]!;
    return sum / (i - start + 1);
  });
}
