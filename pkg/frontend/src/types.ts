/** Shared record shapes for the uavnav export files. */

/** One row of a training metrics log (metrics.csv). */
export interface MetricsRow {
  episode: number;
  envSteps: number;
  meanReward: number;
  jQ: number;
  jPi: number;
  jRae: number;
  alpha: number;
}

/** One sampled pose from a trajectory export (traj_ep*.csv). */
export interface TrajectoryPoint {
  timeStep: number;
  uavId: number;
  x: number;
  y: number;
  z: number;
  yaw: number;
  status: string;
}

/** Aggregate evaluation report (report.json). */
export interface EvalReport {
  successRate: number;
  spl: number;
  extraDistanceMean: number;
  extraDistanceStd: number;
  averageSpeedMean: number;
  averageSpeedStd: number;
  nUavs: number;
  nEpisodes: number;
}

export type FigureKind =
  | "learning_curve"
  | "trajectories_3d"
  | "trajectories_topdown"
  | "metrics_vs_n";

/** A single offline figure request: inputs, kind, destination. */
export interface PlotJob {
  kind: FigureKind;
  inputs: string[];
  output: string;
  /** Smoothing window in episodes; only used by learning_curve. Must be >= 1. */
  window?: number;
}

/** Raised when an input file does not match the expected schema. */
export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}
