"""Forward depth camera: analytic ray casting against the other vehicles
(spheres) and the ground plane.

Depth is Euclidean ray length, not z-depth. Pixels that hit nothing within
range hold exactly max_depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from uavnav import _kernels
from uavnav.world import ContractViolation


class CameraModel:
    """Pinhole depth camera rigidly mounted at the body origin, optical
    axis along body +x, zero pitch. Square pixels; the vertical field of
    view follows from the aspect ratio."""

    def __init__(self, width=64, height=64, horizontal_fov=math.pi / 2, max_depth=20.0):
        if width < 8 or height < 8:
            raise ContractViolation(f"resolution too small: {width}x{height}")
        if not 0.0 < horizontal_fov < math.pi:
            raise ContractViolation(f"horizontal_fov out of range: {horizontal_fov}")
        if not max_depth > 0.0:
            raise ContractViolation(f"max_depth must be positive: {max_depth}")
        self.width = int(width)
        self.height = int(height)
        self.horizontal_fov = float(horizontal_fov)
        self.max_depth = float(max_depth)
        self.focal_px = (self.width / 2.0) / math.tan(self.horizontal_fov / 2.0)
        self.vertical_fov = 2.0 * math.atan((self.height / 2.0) / self.focal_px)

        # body-frame unit ray per pixel: +x forward, columns go right (-y),
        # rows go down (-z); cached once per camera
        cols = np.arange(self.width) - (self.width - 1) / 2.0
        rows = np.arange(self.height) - (self.height - 1) / 2.0
        dirs = np.empty((self.height, self.width, 3))
        dirs[:, :, 0] = self.focal_px
        dirs[:, :, 1] = -cols[None, :]
        dirs[:, :, 2] = -rows[:, None]
        dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
        self.rays_body = np.ascontiguousarray(dirs)


@dataclass
class DepthFrame:
    data: np.ndarray
    timestamp: int


def render_depth(world, uav_index, camera):
    """Depth frame seen by one vehicle. Every other vehicle is a sphere of
    the world's collision radius; the ground is the z = 0 plane. Self is
    never rendered."""
    if not 0 <= uav_index < world.n_uavs:
        raise ContractViolation(f"uav_index {uav_index} out of range")
    observer = world.uavs[uav_index]
    others = [u.position for i, u in enumerate(world.uavs) if i != uav_index]
    centers = np.asarray(others, dtype=np.float64).reshape(len(others), 3)
    data = _kernels.raycast_depth(
        np.asarray(observer.position, dtype=np.float64),
        float(observer.yaw),
        camera.rays_body,
        centers,
        float(world.collision_radius),
        camera.max_depth,
    )
    return DepthFrame(data=data, timestamp=world.time_step)


def min_depth(frame):
    """Nearest sensed distance; max_depth when nothing is in range.

    Every pixel is clamped to max_depth, so the frame minimum already
    implements the no-hit fallback.
    """
    return float(frame.data.min())


def write_pgm(frame, path, max_depth):
    """16-bit binary graymap, millimeter quantization, for eyeballing."""
    mm = np.clip(np.rint(frame.data * 1000.0), 0, 65535).astype(">u2")
    h, w = mm.shape
    if max_depth * 1000.0 > 65535:
        raise ContractViolation(f"max_depth {max_depth} exceeds 16-bit millimeters")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(mm.tobytes())


def read_pgm(path):
    """Inverse of write_pgm; returns depth in meters."""
    with open(path, "rb") as fh:
        blob = fh.read()
    parts = blob.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ContractViolation("not a binary graymap")
    w, h = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    if maxval != 65535:
        raise ContractViolation(f"expected 16-bit graymap, maxval {maxval}")
    mm = np.frombuffer(parts[3][: 2 * w * h], dtype=">u2").reshape(h, w)
    return mm.astype(np.float64) / 1000.0
