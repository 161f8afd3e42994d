export * from "./types.js";
export { parseMetricsCsv, parseTrajectoryCsv, parseReport, groupByUav } from "./parse.js";
export { movingAverage } from "./series.js";
export { projectTopDown, projectPerspective, Vec3 } from "./project.js";
export { plotLearningCurve, plotTrajectories, plotMetricsVsN, TrajectoryView } from "./plots.js";
