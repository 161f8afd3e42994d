"""Command-line entry point: train, eval, render, info.

Exit codes: 0 success, 2 configuration or usage errors, 3 aborted run
(non-finite loss).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from uavnav import autodiff as ad
from uavnav.camera import CameraModel, render_depth, write_pgm
from uavnav.checkpoint import CheckpointError, load_arrays
from uavnav.config import TrainConfig, apply_overrides, load_config
from uavnav.evaluate import AgentPolicy, StraightLinePolicy, run_evaluation
from uavnav.metrics import format_table
from uavnav.scenarios import ScenarioGenerationError, ScenarioSpec, generate_scenario
from uavnav.trainer import Agent, train
from uavnav.world import ContractViolation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _out_root():
    return os.environ.get("UAVNAV_OUT_ROOT", "runs")


def _add_scenario_flags(parser):
    parser.add_argument("--scenario", choices=("random", "circle"), default="random")
    parser.add_argument("--n-uavs", type=int, default=8)
    parser.add_argument("--density", type=float, default=0.06)
    parser.add_argument("--radius", type=float, default=12.0, help="circle radius, meters")
    parser.add_argument("--altitude", type=float, default=5.0)
    parser.add_argument("--seed", type=int, default=0)


def _scenario_from_args(args):
    return ScenarioSpec(
        kind=args.scenario,
        n_uavs=args.n_uavs,
        density=args.density,
        circle_radius=args.radius,
        altitude=args.altitude,
        seed=args.seed,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="uavnav",
        description="Multi-vehicle depth-camera navigation: training and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training session")
    p_train.add_argument("--config", help="sectioned key = value config file")
    p_train.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a single config key (repeatable)",
    )
    p_train.add_argument("--seed", type=int, help="override the config seed")
    p_train.add_argument("--out", default=None, help="output directory")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint or the baseline")
    p_eval.add_argument("--checkpoint", help="trained checkpoint file")
    p_eval.add_argument(
        "--config",
        help="training config for network shapes (default: config.ini next to the checkpoint)",
    )
    p_eval.add_argument(
        "--baseline",
        action="store_true",
        help="use the scripted straight-line policy instead of a checkpoint",
    )
    p_eval.add_argument("--episodes", type=int, default=20)
    p_eval.add_argument("--t-max", type=int, default=500)
    p_eval.add_argument("--dt", type=float, default=0.1)
    p_eval.add_argument("--out", default=None)
    _add_scenario_flags(p_eval)

    p_render = sub.add_parser("render", help="write one vehicle's depth frame as a graymap")
    p_render.add_argument("--uav", type=int, default=0, help="observer index")
    p_render.add_argument("--image-size", type=int, default=64)
    p_render.add_argument("--out", default=None, help="output .pgm path")
    _add_scenario_flags(p_render)

    p_info = sub.add_parser("info", help="describe a checkpoint")
    p_info.add_argument("--checkpoint", required=True)
    return parser


def cmd_train(args):
    if args.config:
        config = load_config(args.config)
    else:
        config = TrainConfig()
    apply_overrides(config, args.overrides)
    if args.seed is not None:
        config.seed = args.seed
        config.validate()
    out_dir = args.out or os.path.join(_out_root(), "train")
    try:
        train(config, out_dir)
    except ad.NonFiniteError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    print(f"training complete; outputs in {out_dir}")
    return EXIT_OK


def _agent_for_checkpoint(args):
    config_path = args.config
    if config_path is None:
        config_path = os.path.join(os.path.dirname(args.checkpoint) or ".", "config.ini")
    config = load_config(config_path)
    agent = Agent(config)
    agent.load(args.checkpoint)
    return agent


def cmd_eval(args):
    if not args.baseline and not args.checkpoint:
        print("eval needs --checkpoint or --baseline", file=sys.stderr)
        return EXIT_CONFIG
    if args.baseline:
        policy = StraightLinePolicy(dt=args.dt)
    else:
        if not os.path.exists(args.checkpoint):
            print(f"checkpoint not found: {args.checkpoint}", file=sys.stderr)
            return EXIT_CONFIG
        policy = AgentPolicy(_agent_for_checkpoint(args))
    spec = _scenario_from_args(args)
    out_dir = args.out or os.path.join(_out_root(), "eval")
    report, _ = run_evaluation(
        policy, spec, episodes=args.episodes, seed=args.seed, dt=args.dt,
        t_max=args.t_max, out_dir=out_dir,
    )
    print(format_table(report))
    print(f"records written to {out_dir}")
    return EXIT_OK


def cmd_render(args):
    spec = _scenario_from_args(args)
    world = generate_scenario(spec)
    if not 0 <= args.uav < world.n_uavs:
        print(f"vehicle index {args.uav} out of range [0, {world.n_uavs})", file=sys.stderr)
        return EXIT_CONFIG
    camera = CameraModel(width=args.image_size, height=args.image_size,
                         horizontal_fov=math.pi / 2, max_depth=20.0)
    frame = render_depth(world, args.uav, camera)
    out_path = args.out or os.path.join(_out_root(), f"depth_uav{args.uav}.pgm")
    out_parent = os.path.dirname(out_path)
    if out_parent:
        os.makedirs(out_parent, exist_ok=True)
    write_pgm(frame, out_path, camera.max_depth)
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_info(args):
    if not os.path.exists(args.checkpoint):
        print(f"checkpoint not found: {args.checkpoint}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        arrays = load_arrays(args.checkpoint)
    except CheckpointError as exc:
        print(f"cannot read checkpoint: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"checkpoint: {args.checkpoint}")
    print(f"arrays: {len(arrays)}")
    if "encoder.fc.bias" in arrays:
        print(f"latent_dim: {arrays['encoder.fc.bias'].shape[0]}")
    if "counters" in arrays:
        counters = arrays["counters"]
        print(f"update_count: {int(counters[0])}")
        print(f"env_steps: {int(counters[1])}")
    total = 0
    for name in sorted(arrays):
        arr = arrays[name]
        total += arr.size
        print(f"  {name}  {'x'.join(str(d) for d in arr.shape) or 'scalar'}")
    print(f"total parameters: {total}")
    config_path = os.path.join(os.path.dirname(args.checkpoint) or ".", "config.ini")
    if os.path.exists(config_path):
        print(f"config echo: {config_path}")
        with open(config_path, encoding="utf-8") as fh:
            sys.stdout.write(fh.read())
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": cmd_train,
        "eval": cmd_eval,
        "render": cmd_render,
        "info": cmd_info,
    }
    try:
        return handlers[args.command](args)
    except (ContractViolation, ScenarioGenerationError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
