"""Shared 3D world: multi-vehicle kinematic state, stepping, collision and
arrival detection, trajectory logging.

Vehicles follow first-order velocity commands (forward speed, climb rate,
yaw rate) integrated at a fixed timestep. Finished vehicles stay frozen in
place and remain physical obstacles for the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# command bounds: (v_x forward m/s, v_z climb m/s, v_omega yaw rate rad/s)
ACTION_LOW = np.array([0.0, -0.5, -0.5])
ACTION_HIGH = np.array([2.0, 0.5, 0.5])
ACTION_DIM = 3

DEFAULT_COLLISION_RADIUS = 0.5
ARRIVAL_RADIUS = 0.5


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation precondition."""


class Status(Enum):
    ACTIVE = "active"
    ARRIVED = "arrived"
    COLLIDED = "collided"
    TIMED_OUT = "timed_out"

    @property
    def terminal(self):
        return self is not Status.ACTIVE


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


def clamp_action(action):
    """Clip a raw (v_x, v_z, v_omega) command to the legal box."""
    arr = np.asarray(action, dtype=np.float64)
    if arr.shape != (3,):
        raise ContractViolation(f"action must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"non-finite action components: {arr}")
    return np.clip(arr, ACTION_LOW, ACTION_HIGH)


@dataclass
class UavState:
    """Pose, last command, goal and episode status of one vehicle."""

    position: np.ndarray
    yaw: float
    goal: np.ndarray
    velocity_cmd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    status: Status = Status.ACTIVE

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).copy()
        self.goal = np.asarray(self.goal, dtype=np.float64).copy()
        self.velocity_cmd = np.asarray(self.velocity_cmd, dtype=np.float64).copy()
        self.yaw = wrap_angle(float(self.yaw))

    def goal_distance(self):
        return float(np.linalg.norm(self.goal - self.position))


@dataclass
class Workspace:
    """Axis-aligned flight box; positions are clamped to it every step."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=np.float64).copy()
        self.hi = np.asarray(self.hi, dtype=np.float64).copy()
        if not np.all(self.hi > self.lo):
            raise ContractViolation(f"degenerate workspace: lo={self.lo} hi={self.hi}")

    def clamp(self, p):
        return np.minimum(np.maximum(p, self.lo), self.hi)

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))


@dataclass
class WorldState:
    uavs: list
    workspace: Workspace
    collision_radius: float = DEFAULT_COLLISION_RADIUS
    time_step: int = 0

    @property
    def n_uavs(self):
        return len(self.uavs)

    def all_terminal(self):
        return all(u.status.terminal for u in self.uavs)


def step_world(world, actions, dt):
    """Advance every active vehicle one timestep under its clamped command.

    Translation uses the yaw from before the step; heading then integrates
    the yaw rate. Finished vehicles do not move.
    """
    if len(actions) != world.n_uavs:
        raise ContractViolation(
            f"got {len(actions)} actions for {world.n_uavs} vehicles"
        )
    if not dt > 0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    for uav, action in zip(world.uavs, actions):
        if uav.status.terminal:
            continue
        cmd = clamp_action(action)
        v_x, v_z, v_omega = cmd
        c, s = math.cos(uav.yaw), math.sin(uav.yaw)
        delta = np.array([v_x * c, v_x * s, v_z]) * dt
        uav.position = world.workspace.clamp(uav.position + delta)
        uav.yaw = wrap_angle(uav.yaw + v_omega * dt)
        uav.velocity_cmd = cmd
    world.time_step += 1
    return world


def detect_collisions(world):
    """Unordered index pairs (i < j) closer than twice the collision radius,
    with at least one member still active."""
    threshold = 2.0 * world.collision_radius
    pairs = []
    for i in range(world.n_uavs):
        for j in range(i + 1, world.n_uavs):
            a, b = world.uavs[i], world.uavs[j]
            if a.status.terminal and b.status.terminal:
                continue
            if np.linalg.norm(a.position - b.position) < threshold:
                pairs.append((i, j))
    return pairs


def apply_collision_pairs(world, pairs):
    """Mark both members of every reported pair as collided."""
    for i, j in pairs:
        world.uavs[i].status = Status.COLLIDED
        world.uavs[j].status = Status.COLLIDED


def check_arrivals(world):
    """Indices of active vehicles within the arrival radius of their goal."""
    return [
        i
        for i, u in enumerate(world.uavs)
        if u.status is Status.ACTIVE and u.goal_distance() < ARRIVAL_RADIUS
    ]


def apply_arrivals(world, indices):
    for i in indices:
        world.uavs[i].status = Status.ARRIVED


def advance(world, actions, dt):
    """step_world, then mark collisions (first) and arrivals (second).

    Returns (collision_pairs, arrival_indices). A vehicle that is both
    colliding and inside its arrival radius counts as collided.
    """
    step_world(world, actions, dt)
    pairs = detect_collisions(world)
    apply_collision_pairs(world, pairs)
    arrivals = check_arrivals(world)
    apply_arrivals(world, arrivals)
    return pairs, arrivals


def mark_timeouts(world):
    """Flip every still-active vehicle to timed out (horizon exhausted)."""
    timed_out = []
    for i, u in enumerate(world.uavs):
        if u.status is Status.ACTIVE:
            u.status = Status.TIMED_OUT
            timed_out.append(i)
    return timed_out


class TrajectoryLog:
    """Per-step pose record for every vehicle, exportable as CSV."""

    COLUMNS = ("time_step", "uav_id", "x", "y", "z", "yaw", "status")

    def __init__(self):
        self.rows = []

    def record(self, world):
        for i, u in enumerate(world.uavs):
            self.rows.append(
                (
                    world.time_step,
                    i,
                    float(u.position[0]),
                    float(u.position[1]),
                    float(u.position[2]),
                    float(u.yaw),
                    u.status.value,
                )
            )

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for t, i, x, y, z, yaw, status in self.rows:
                fh.write(f"{t},{i},{x!r},{y!r},{z!r},{yaw!r},{status}\n")
