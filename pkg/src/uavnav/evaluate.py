"""Evaluation harness: roll a frozen policy (or the scripted baseline)
over seeded scenarios and aggregate the navigation metrics."""

from __future__ import annotations

import dataclasses
import json
import math
import os

import numpy as np

from uavnav.camera import render_depth
from uavnav.metrics import EpisodeResult, UavResult, make_report
from uavnav.observation import assemble_observation, body_frame_goal
from uavnav.scenarios import generate_scenario
from uavnav.world import (
    ACTION_HIGH,
    ACTION_LOW,
    ContractViolation,
    Status,
    TrajectoryLog,
    advance,
    mark_timeouts,
)


class StraightLinePolicy:
    """Scripted baseline: steer toward the goal along the straight line,
    as fast as the command bounds allow, with no avoidance at all."""

    YAW_GAIN = 2.0

    def __init__(self, dt):
        self.dt = float(dt)

    def begin_episode(self, world):
        pass

    def act(self, world):
        actions = []
        for uav in world.uavs:
            if uav.status is not Status.ACTIVE:
                actions.append(np.zeros(3))
                continue
            rel = body_frame_goal(uav.position, uav.yaw, uav.goal)
            dist = float(np.linalg.norm(rel))
            if dist < 1e-9:
                actions.append(np.zeros(3))
                continue
            u = rel / dist
            planar = math.hypot(u[0], u[1])
            # largest speed that respects both axis bounds, capped so one
            # step never overshoots the goal
            s = min(
                ACTION_HIGH[0] / max(planar, 1e-9),
                ACTION_HIGH[1] / max(abs(u[2]), 1e-9),
                dist / self.dt,
            )
            heading_error = math.atan2(u[1], u[0])
            actions.append(
                np.array(
                    [
                        min(max(s * planar, ACTION_LOW[0]), ACTION_HIGH[0]),
                        min(max(s * u[2], ACTION_LOW[1]), ACTION_HIGH[1]),
                        min(max(self.YAW_GAIN * heading_error, ACTION_LOW[2]), ACTION_HIGH[2]),
                    ]
                )
            )
        return actions


class AgentPolicy:
    """Deterministic (mean-action) wrapper around a trained agent."""

    def __init__(self, agent):
        self.agent = agent
        self._frames = []
        self._obs = []
        self._pending_active = []

    def begin_episode(self, world):
        self._frames = []
        self._obs = []
        self._pending_active = []
        for i, uav in enumerate(world.uavs):
            self._frames.append([render_depth(world, i, self.agent.camera)])
            self._obs.append(
                assemble_observation(self._frames[i], uav, self.agent.camera.max_depth)
            )

    def act(self, world):
        active = [i for i, u in enumerate(world.uavs) if u.status is Status.ACTIVE]
        actions = [np.zeros(3) for _ in world.uavs]
        if active:
            chosen = self.agent.act([self._obs[i] for i in active], mode="mean")
            for row, i in enumerate(active):
                actions[i] = chosen[row]
        self._pending_active = active
        return actions

    def observe(self, world):
        for i in self._pending_active:
            self._frames[i].append(render_depth(world, i, self.agent.camera))
            self._obs[i] = assemble_observation(
                self._frames[i], world.uavs[i], self.agent.camera.max_depth
            )


def run_episode(policy, world, dt, t_max):
    """Roll one episode to terminal or horizon; returns per-vehicle
    results and the trajectory log."""
    policy.begin_episode(world)
    n = world.n_uavs
    starts = [u.position.copy() for u in world.uavs]
    path_lengths = [0.0] * n
    active_steps = [0] * n
    log = TrajectoryLog()
    log.record(world)
    for _ in range(t_max):
        if world.all_terminal():
            break
        was_active = [u.status is Status.ACTIVE for u in world.uavs]
        before = [u.position.copy() for u in world.uavs]
        actions = policy.act(world)
        advance(world, actions, dt)
        for i in range(n):
            if was_active[i]:
                path_lengths[i] += float(
                    np.linalg.norm(world.uavs[i].position - before[i])
                )
                active_steps[i] += 1
        if hasattr(policy, "observe"):
            policy.observe(world)
        log.record(world)
    mark_timeouts(world)

    uav_results = []
    for i, uav in enumerate(world.uavs):
        displacement = float(np.linalg.norm(uav.position - starts[i]))
        if path_lengths[i] < displacement - 1e-9:
            raise ContractViolation(
                f"path length {path_lengths[i]} below net displacement {displacement}"
            )
        shortest = float(np.linalg.norm(uav.goal - starts[i]))
        steps = active_steps[i]
        uav_results.append(
            UavResult(
                success=uav.status is Status.ARRIVED,
                path_length=path_lengths[i],
                shortest_path=shortest,
                steps=steps,
                mean_speed=path_lengths[i] / (steps * dt) if steps > 0 else 0.0,
                status=uav.status.value,
            )
        )
    return uav_results, log


def run_evaluation(policy, spec, episodes, seed, dt, t_max, out_dir=None):
    """M seeded episodes; returns (MetricsReport, [EpisodeResult]).

    With out_dir set, also writes results.jsonl, report.json, and one
    trajectory CSV per episode.
    """
    if episodes < 1:
        raise ContractViolation(f"episodes must be >= 1, got {episodes}")
    rng = np.random.default_rng(seed)
    results = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        jsonl = open(os.path.join(out_dir, "results.jsonl"), "w", encoding="utf-8")
    else:
        jsonl = None
    try:
        for j in range(episodes):
            ep_seed = int(rng.integers(0, 2**63))
            world = generate_scenario(dataclasses.replace(spec, seed=ep_seed))
            uav_results, log = run_episode(policy, world, dt, t_max)
            results.append(EpisodeResult(uavs=uav_results, seed=ep_seed))
            if out_dir is not None:
                log.write_csv(os.path.join(out_dir, f"traj_ep{j}.csv"))
            if jsonl is not None:
                record = {
                    "episode": j,
                    "seed": ep_seed,
                    "uavs": [u.__dict__ for u in uav_results],
                }
                jsonl.write(json.dumps(record) + "\n")
    finally:
        if jsonl is not None:
            jsonl.close()
    report = make_report(results, n_uavs=spec.n_uavs, n_episodes=episodes)
    if out_dir is not None:
        with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return report, results
