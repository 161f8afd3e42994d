"""Evaluation metrics: success rate, success weighted by path length,
extra distance, and average speed."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class MetricsError(ValueError):
    """Raised when a metric is undefined for the given results."""


@dataclass
class UavResult:
    success: bool
    path_length: float  # meters actually flown
    shortest_path: float  # straight-line start to goal, meters
    steps: int
    mean_speed: float  # path_length / (steps * dt)
    status: str


@dataclass
class EpisodeResult:
    uavs: list
    seed: int


@dataclass
class MetricsReport:
    success_rate: float
    spl: float
    extra_distance_mean: float
    extra_distance_std: float
    average_speed_mean: float
    average_speed_std: float
    n_uavs: int
    n_episodes: int

    def to_dict(self):
        return asdict(self)


def _all_uavs(results):
    rows = [u for episode in results for u in episode.uavs]
    if not rows:
        raise MetricsError("no results to aggregate")
    return rows


def compute_success_rate(results):
    rows = _all_uavs(results)
    return sum(1 for u in rows if u.success) / len(rows)


def compute_spl(results):
    """Mean over every vehicle-episode of S * l / max(p, l)."""
    rows = _all_uavs(results)
    total = 0.0
    for u in rows:
        if u.success:
            total += u.shortest_path / max(u.path_length, u.shortest_path)
    return total / len(rows)


def compute_extra_distance(results):
    """Mean and population std of (p - l) over successful vehicles only.

    Undefined with zero successes; returns (nan, nan) then.
    """
    rows = [u for u in _all_uavs(results) if u.success]
    if not rows:
        return float("nan"), float("nan")
    extras = np.array([u.path_length - u.shortest_path for u in rows])
    return float(extras.mean()), float(extras.std())


def compute_average_speed(results):
    """Mean and population std of per-vehicle mean speed, all vehicles."""
    speeds = np.array([u.mean_speed for u in _all_uavs(results)])
    return float(speeds.mean()), float(speeds.std())


def make_report(results, n_uavs, n_episodes):
    extra_mean, extra_std = compute_extra_distance(results)
    speed_mean, speed_std = compute_average_speed(results)
    return MetricsReport(
        success_rate=compute_success_rate(results),
        spl=compute_spl(results),
        extra_distance_mean=extra_mean,
        extra_distance_std=extra_std,
        average_speed_mean=speed_mean,
        average_speed_std=speed_std,
        n_uavs=n_uavs,
        n_episodes=n_episodes,
    )


def format_table(report):
    """Aligned two-column text rendering of a MetricsReport."""
    rows = [
        ("vehicles", f"{report.n_uavs}"),
        ("episodes", f"{report.n_episodes}"),
        ("success rate", f"{report.success_rate:.4f}"),
        ("spl", f"{report.spl:.4f}"),
        (
            "extra distance [m]",
            f"{report.extra_distance_mean:.4f} +/- {report.extra_distance_std:.4f}",
        ),
        (
            "average speed [m/s]",
            f"{report.average_speed_mean:.4f} +/- {report.average_speed_std:.4f}",
        ),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)
