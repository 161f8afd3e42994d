"""Per-vehicle observation assembly: normalized depth-frame stack plus
body-frame goal offset and current velocity command."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from uavnav.world import ContractViolation

FRAME_STACK = 3


@dataclass
class Observation:
    depth_stack: np.ndarray  # (3, H, W) float32, depth / max_depth, oldest first
    rel_goal: np.ndarray  # (3,) float64, meters, body frame
    velocity: np.ndarray  # (3,) float64, last (v_x, v_z, v_omega) command


def body_frame_goal(position, yaw, goal):
    """Goal offset rotated into the body frame: Rz(-yaw) @ (goal - position).

    The z component passes through unchanged.
    """
    position = np.asarray(position, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    if not (np.all(np.isfinite(position)) and np.all(np.isfinite(goal)) and math.isfinite(yaw)):
        raise ContractViolation("non-finite pose or goal")
    d = goal - position
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]])


def assemble_observation(frames, uav, max_depth):
    """Build the policy input from this vehicle's recent depth frames.

    frames holds the episode's frames oldest to newest; the newest three
    are stacked, repeating the first frame while fewer than three exist.
    """
    if not frames:
        raise ContractViolation("need at least one depth frame")
    recent = list(frames[-FRAME_STACK:])
    while len(recent) < FRAME_STACK:
        recent.insert(0, recent[0])
    stack = np.stack([f.data for f in recent]).astype(np.float32) / np.float32(max_depth)
    return Observation(
        depth_stack=stack,
        rel_goal=body_frame_goal(uav.position, uav.yaw, uav.goal),
        velocity=np.asarray(uav.velocity_cmd, dtype=np.float64).copy(),
    )
