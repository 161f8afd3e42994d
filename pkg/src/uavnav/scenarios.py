"""Scenario generation: random box worlds and antipodal circle worlds.

Random scenarios size the flight box so its volume is n_uavs / density,
then rejection-sample starts and goals under minimum-separation rules.
Circle scenarios place vehicles uniformly on a circle with each goal at
the antipode of its start. Both are deterministic in the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from uavnav.world import (
    DEFAULT_COLLISION_RADIUS,
    ContractViolation,
    UavState,
    WorldState,
    Workspace,
    wrap_angle,
)

MIN_GOAL_DISTANCE = 5.0
MAX_SAMPLING_ATTEMPTS = 10_000
GROUND_CLEARANCE = 1.0
CIRCLE_XY_MARGIN = 2.0


class ScenarioGenerationError(RuntimeError):
    """Raised when rejection sampling cannot satisfy the separation rules."""


@dataclass
class ScenarioSpec:
    kind: str
    n_uavs: int
    density: float = 0.06
    circle_radius: float = 12.0
    altitude: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("random", "circle"):
            raise ContractViolation(f"unknown scenario kind {self.kind!r}")
        if self.n_uavs < 1:
            raise ContractViolation(f"n_uavs must be >= 1, got {self.n_uavs}")
        if self.kind == "random" and not self.density > 0:
            raise ContractViolation(f"density must be > 0, got {self.density}")
        if self.kind == "circle" and not self.circle_radius > 0:
            raise ContractViolation(f"circle_radius must be > 0, got {self.circle_radius}")


def _facing_yaw(start, goal):
    return wrap_angle(math.atan2(goal[1] - start[1], goal[0] - start[0]))


def _spend_attempt(budget):
    if budget[0] >= MAX_SAMPLING_ATTEMPTS:
        raise ScenarioGenerationError(
            f"no valid placement after {MAX_SAMPLING_ATTEMPTS} attempts; "
            "density too high for the separation constraints"
        )
    budget[0] += 1


def _sample_start_goal_pairs(rng, workspace, n, min_sep, budget):
    """Draw n (start, goal) pairs: starts mutually >= min_sep apart, goals
    mutually >= min_sep apart, each goal >= MIN_GOAL_DISTANCE from its own
    start. A start whose goal region is blocked is redrawn rather than
    letting the goal search run the whole budget dry.

    budget is a single-element attempt counter; every candidate draw costs
    one attempt so the whole generation is bounded together.
    """
    goal_tries_per_start = 50
    starts, goals = [], []
    while len(starts) < n:
        _spend_attempt(budget)
        start = rng.uniform(workspace.lo, workspace.hi)
        if any(np.linalg.norm(start - s) < min_sep for s in starts):
            continue
        for _ in range(goal_tries_per_start):
            _spend_attempt(budget)
            goal = rng.uniform(workspace.lo, workspace.hi)
            if np.linalg.norm(goal - start) < MIN_GOAL_DISTANCE:
                continue
            if any(np.linalg.norm(goal - g) < min_sep for g in goals):
                continue
            starts.append(start)
            goals.append(goal)
            break
    return starts, goals


def generate_scenario(spec, collision_radius=DEFAULT_COLLISION_RADIUS):
    """Build a fresh WorldState from a ScenarioSpec."""
    if spec.kind == "circle":
        return _generate_circle(spec, collision_radius)
    return _generate_random(spec, collision_radius)


def _generate_random(spec, collision_radius):
    volume = spec.n_uavs / spec.density
    side = volume ** (1.0 / 3.0)
    workspace = Workspace(
        lo=np.array([-side / 2.0, -side / 2.0, GROUND_CLEARANCE]),
        hi=np.array([side / 2.0, side / 2.0, GROUND_CLEARANCE + side]),
    )
    rng = np.random.default_rng(spec.seed)
    min_sep = 4.0 * collision_radius
    budget = [0]
    starts, goals = _sample_start_goal_pairs(
        rng, workspace, spec.n_uavs, min_sep, budget
    )

    uavs = [
        UavState(position=s, yaw=_facing_yaw(s, g), goal=g)
        for s, g in zip(starts, goals)
    ]
    return WorldState(uavs=uavs, workspace=workspace, collision_radius=collision_radius)


def _generate_circle(spec, collision_radius):
    r = spec.circle_radius
    extent = r + CIRCLE_XY_MARGIN
    workspace = Workspace(
        lo=np.array([-extent, -extent, GROUND_CLEARANCE]),
        hi=np.array([extent, extent, max(2.0 * spec.altitude, spec.altitude + 1.0)]),
    )
    uavs = []
    for k in range(spec.n_uavs):
        theta = 2.0 * math.pi * k / spec.n_uavs
        start = np.array([r * math.cos(theta), r * math.sin(theta), spec.altitude])
        goal = np.array([-start[0], -start[1], spec.altitude])
        uavs.append(UavState(position=start, yaw=_facing_yaw(start, goal), goal=goal))
    return WorldState(uavs=uavs, workspace=workspace, collision_radius=collision_radius)
