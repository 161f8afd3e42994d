/** 3D-to-2D projections for trajectory figures. */

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

/** Bird's-eye view: keep the horizontal plane, drop altitude entirely. */
export function projectTopDown(p: Vec3): [number, number] {
  return [p.x, p.y];
}

/**
 * Fixed-angle perspective for the 3D trajectory view. The camera orbits the
 * origin at the given azimuth/elevation (radians) and projects with a simple
 * pinhole at the given distance; deterministic so output files are stable.
 */
export function projectPerspective(
  p: Vec3,
  azimuth = 0.6,
  elevation = 0.45,
  distance = 60,
): [number, number] {
  const ca = Math.cos(azimuth);
  const sa = Math.sin(azimuth);
  const ce = Math.cos(elevation);
  const se = Math.sin(elevation);
  // Rotate about z by azimuth, then tilt about the new x axis by elevation.
  const x1 = ca * p.x + sa * p.y;
  const y1 = -sa * p.x + ca * p.y;
  const y2 = ce * y1 + se * p.z;
  const depth = -se * y1 + ce * p.z;
  const w = distance / (distance - depth);
  return [x1 * w, y2 * w];
}
