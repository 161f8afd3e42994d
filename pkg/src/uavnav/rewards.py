"""Scalar reward: goal-progress term plus obstacle-clearance penalty."""

from __future__ import annotations

from dataclasses import dataclass

from uavnav.world import ARRIVAL_RADIUS, ContractViolation


@dataclass
class RewardParams:
    r_arrival: float = 50.0
    r_collision: float = -10.0
    w_goal: float = 3.0
    w_avoid: float = -0.05
    d_safe: float = 5.0
    arrival_radius: float = ARRIVAL_RADIUS

    def __post_init__(self):
        if not self.w_avoid < 0:
            raise ContractViolation(f"w_avoid must be negative, got {self.w_avoid}")
        if not self.d_safe > 0:
            raise ContractViolation(f"d_safe must be positive, got {self.d_safe}")


def goal_reward(prev_dist, curr_dist, params):
    """Arrival bonus inside the arrival radius; otherwise progress toward
    the goal scaled by w_goal (negative when moving away)."""
    if prev_dist < 0 or curr_dist < 0:
        raise ContractViolation("distances must be non-negative")
    if curr_dist < params.arrival_radius:
        return params.r_arrival
    return params.w_goal * (prev_dist - curr_dist)


def avoid_reward(collided, d_min, params):
    """Collision penalty, else a shaped penalty growing linearly as the
    nearest sensed obstacle comes inside d_safe."""
    if d_min < 0:
        raise ContractViolation("d_min must be non-negative")
    if collided:
        return params.r_collision
    return params.w_avoid * max(params.d_safe - d_min, 0.0)


def total_reward(goal_part, avoid_part):
    return goal_part + avoid_part
