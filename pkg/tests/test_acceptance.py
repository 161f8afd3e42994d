"""End-to-end release checks over the full stack.

Each check records one `<name>: PASS|FAIL` verdict line, printed as a
summary block after the run (see conftest), and wall-clock budgets are
enforced as part of the check itself.
"""

import functools
import math
import tempfile
import time
from pathlib import Path

import numpy as np

import oracles
from gradcheck import relative_error
from test_autodiff import CASES, run_case
from test_camera import make_world
from test_observation_rewards import AVOID_CASES, GOAL_CASES
from test_replay import make_transition
from test_trainer import filled_agent, snapshot

import uavnav.autodiff as ad
from uavnav.camera import CameraModel, render_depth
from uavnav.config import TrainConfig
from uavnav.evaluate import StraightLinePolicy, run_evaluation
from uavnav.metrics import (
    EpisodeResult,
    UavResult,
    compute_spl,
    compute_success_rate,
)
from uavnav.nets import GOAL_VEL_DIM, Critic, Encoder, make_nets
from uavnav.replay import ReplayBuffer
from uavnav.rewards import RewardParams, avoid_reward, goal_reward, total_reward
from uavnav.scenarios import ScenarioSpec, generate_scenario
from uavnav.trainer import train


VERDICTS = []


def _verdict(name, word, elapsed):
    """Record one pass/fail line; conftest prints the block post-capture."""
    VERDICTS.append(f"{name}: {word} ({elapsed:.1f}s)")


def criterion(name, budget_s=None):
    """Wrap a check so it reports a verdict line and owns a time budget."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper():
            t0 = time.perf_counter()
            try:
                fn()
                elapsed = time.perf_counter() - t0
                if budget_s is not None and elapsed > budget_s:
                    raise AssertionError(
                        f"{name} took {elapsed:.1f}s, over its {budget_s:.0f}s budget"
                    )
            except BaseException:
                _verdict(name, "FAIL", time.perf_counter() - t0)
                raise
            _verdict(name, "PASS", elapsed)

        return wrapper

    return deco


@criterion("reward-unit-suite", budget_s=1.0)
def test_reward_unit_suite():
    """Hand-worked reward cases, exact to 1e-12."""
    p = RewardParams()
    cases = 0
    for prev, curr, expected in GOAL_CASES:
        assert abs(goal_reward(prev, curr, p) - expected) < 1e-12
        cases += 1
    for collided, dmin, expected in AVOID_CASES:
        assert abs(avoid_reward(collided, dmin, p) - expected) < 1e-12
        cases += 1
    # combined terms, still by hand: 3*1 - 0.05*1 and 3*0.5 - 10
    assert abs(total_reward(goal_reward(10.0, 9.0, p), avoid_reward(False, 4.0, p)) - 2.95) < 1e-12
    assert abs(total_reward(goal_reward(8.0, 7.5, p), avoid_reward(True, 0.3, p)) + 8.5) < 1e-12
    cases += 2
    assert cases >= 12


@criterion("spl-oracle", budget_s=5.0)
def test_spl_oracle():
    """100 random result sets against the scalar recomputation, and the
    bound spl <= success rate on every set."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        n_eps = int(rng.integers(1, 5))
        n_uavs = int(rng.integers(1, 5))
        episodes, successes, shortest, actual = [], [], [], []
        for e in range(n_eps):
            uavs = []
            for _ in range(n_uavs):
                s = bool(rng.random() < 0.7)
                l = float(rng.uniform(1.0, 40.0))
                # occasionally shorter than l to exercise the max(p, l) clamp
                q = float(l * rng.uniform(0.85, 2.5))
                uavs.append(
                    UavResult(success=s, path_length=q, shortest_path=l,
                              steps=10, mean_speed=1.0,
                              status="arrived" if s else "timeout")
                )
                successes.append(s)
                shortest.append(l)
                actual.append(q)
            episodes.append(EpisodeResult(uavs=uavs, seed=e))
        spl = compute_spl(episodes)
        assert abs(spl - oracles.oracle_spl(successes, shortest, actual)) < 1e-9
        assert spl <= compute_success_rate(episodes) + 1e-12


@criterion("renderer-oracle", budget_s=30.0)
def test_renderer_oracle():
    """100 random camera/scene configurations, every pixel within 1e-4 m
    of the scalar-geometry oracle."""
    rng = np.random.default_rng(23)
    for _ in range(100):
        cam = CameraModel(
            width=int(rng.integers(8, 21)),
            height=int(rng.integers(8, 21)),
            horizontal_fov=float(rng.uniform(0.7, 1.8)),
            max_depth=float(rng.uniform(8.0, 25.0)),
        )
        n = int(rng.integers(2, 7))
        positions = rng.uniform([-8, -8, 1], [8, 8, 9], (n, 3))
        yaw = float(rng.uniform(-math.pi, math.pi))
        world = make_world([tuple(q) for q in positions], yaw0=yaw)
        frame = render_depth(world, 0, cam)
        expected = oracles.oracle_depth_frame(
            tuple(positions[0]), yaw, [tuple(q) for q in positions[1:]], 0.5,
            cam.width, cam.height, cam.horizontal_fov, cam.max_depth,
        )
        assert np.max(np.abs(frame.data - expected)) < 1e-4


# Finite differences on a float32 relu network need care: a probe window
# that straddles a relu kink measures the average of two slopes, and the
# loss value itself is quantized at ulp scale. Probes are therefore only
# accepted when the relu sign masks are identical at both endpoints and
# a halved-step re-estimate agrees; entries whose curvature rejects the
# coarsest step are retried at finer steps, which must earn pure relative
# agreement (no rounding allowance) since they only suit large gradients.
_FD_LEVELS = (3e-4, 1e-4, 3e-5)


def _composite_case(seed):
    """Real encoder and twin-head critic with a batch of random inputs;
    returns the training-style loss closure, an instrumented twin that
    also reports relu sign masks, and the parameter map."""
    rng = np.random.default_rng(seed)
    net_rng = np.random.default_rng(1000 + seed)
    encoder = Encoder(net_rng, 16, 16, latent_dim=8)
    critic = Critic(net_rng, hidden_dim=16, state_dim=8 + GOAL_VEL_DIM)
    stack = rng.random((2, 3, 16, 16)).astype(np.float32)
    extra = rng.standard_normal((2, GOAL_VEL_DIM)).astype(np.float32)
    actions = rng.uniform(-0.9, 0.9, (2, 3)).astype(np.float32)
    target = rng.standard_normal((2, 1)).astype(np.float32)

    def real_loss():
        latent = encoder.forward(ad.constant(stack))
        state = ad.concat_cols([latent, ad.constant(extra)])
        q1, q2 = critic.forward(state, ad.constant(actions))
        t = ad.constant(target)
        e1 = ad.sub(q1, t)
        e2 = ad.sub(q2, t)
        return ad.add(ad.mean_all(ad.mul(e1, e1)), ad.mean_all(ad.mul(e2, e2)))

    def instrumented():
        # identical op sequence, with relu pre-activations kept
        p = encoder.params
        pres = []
        h = ad.constant(stack)
        for idx, stride in ((1, 2), (2, 1), (3, 1), (4, 1)):
            pre = ad.add_channel_bias(
                ad.conv2d(h, p[f"conv{idx}.kernel"], stride), p[f"conv{idx}.bias"]
            )
            pres.append(pre)
            h = ad.relu(pre)
        flat = ad.reshape(h, (h.shape[0], encoder.flat_dim))
        z = ad.dense(flat, p["fc.weight"], p["fc.bias"])
        latent = ad.tanh(ad.layer_norm(z, p["ln.gain"], p["ln.shift"]))
        state = ad.concat_cols([latent, ad.constant(extra)])
        cols = ad.concat_cols([state, ad.constant(actions)])
        cp = critic.params
        q = {}
        for head in ("q1", "q2"):
            pre1 = ad.dense(cols, cp[f"{head}.fc1.weight"], cp[f"{head}.fc1.bias"])
            pres.append(pre1)
            h1 = ad.relu(pre1)
            pre2 = ad.dense(h1, cp[f"{head}.fc2.weight"], cp[f"{head}.fc2.bias"])
            pres.append(pre2)
            q[head] = ad.dense(ad.relu(pre2), cp[f"{head}.out.weight"], cp[f"{head}.out.bias"])
        t = ad.constant(target)
        e1 = ad.sub(q["q1"], t)
        e2 = ad.sub(q["q2"], t)
        loss = ad.add(ad.mean_all(ad.mul(e1, e1)), ad.mean_all(ad.mul(e2, e2)))
        masks = b"".join((pre.data > 0).tobytes() for pre in pres)
        return loss.item(), masks

    params = {f"enc.{k}": p for k, p in encoder.params.items()}
    params.update({f"critic.{k}": p for k, p in critic.params.items()})
    return real_loss, instrumented, params, rng


def _fd_probe(instrumented, flat, i, eps):
    """Central difference on one entry, or None if a relu flips inside
    the probe window."""
    keep = flat[i]
    flat[i] = keep + eps
    hi_x = float(flat[i])
    with ad.no_grad():
        hi, m_hi = instrumented()
    flat[i] = keep - eps
    lo_x = float(flat[i])
    with ad.no_grad():
        lo, m_lo = instrumented()
    flat[i] = keep
    if m_hi != m_lo:
        return None
    # realized float32 perturbation, not the nominal eps
    return (hi - lo) / (hi_x - lo_x)


def _entry_estimate(instrumented, flat, i, ulp):
    for level, eps in enumerate(_FD_LEVELS):
        fd1 = _fd_probe(instrumented, flat, i, eps)
        fd2 = _fd_probe(instrumented, flat, i, eps / 2)
        if fd1 is None or fd2 is None:
            continue
        allow = 1e-3 * max(abs(fd1), abs(fd2))
        if level == 0:
            allow += 5.0 * ulp / eps
        if abs(fd1 - fd2) <= allow:
            return fd2
    return None


def _composite_fd_error(seed):
    """Gradient of the shared encoder -> twin-head critic path against
    accepted finite-difference probes of every parameter tensor."""
    real_loss, instrumented, params, rng = _composite_case(seed)
    root = real_loss()
    ad.backward(root)
    with ad.no_grad():
        base, _ = instrumented()
    assert base == root.item()  # the instrumented twin IS the shipped wiring
    ulp = float(np.spacing(np.float32(abs(base))))
    analytic, numeric = [], []
    for _, p in sorted(params.items()):
        flat = p.data.reshape(-1)
        gflat = p.grad.reshape(-1)
        want = min(3, flat.size)
        taken = 0
        for i in rng.permutation(flat.size):
            got = _entry_estimate(instrumented, flat, i, ulp)
            if got is None:
                continue
            numeric.append(got)
            analytic.append(float(gflat[i]))
            taken += 1
            if taken == want:
                break
        assert taken >= 1, "no valid probe found in tensor"
    return relative_error(np.array(analytic), np.array(numeric))


@criterion("gradient-fd-suite", budget_s=300.0)
def test_gradient_fd_suite():
    """Every differentiable op over 20 seeds, then the full encoder ->
    critic composite, all against central finite differences."""
    assert len(CASES) >= 25
    for name in sorted(CASES):
        for seed in range(20):
            run_case(name, seed)
    for seed in range(20):
        assert _composite_fd_error(seed) < 1e-3


@criterion("gradient-stop")
def test_gradient_stop():
    """The policy step must leave the shared encoder bitwise untouched;
    the critic step must move it."""
    agent = filled_agent()
    arrays = agent._batch_arrays(agent.buffer.sample(16, np.random.default_rng(3)))
    noise = np.random.default_rng(4).standard_normal((16, 3))

    before = snapshot(agent.nets.encoder.params)
    agent.actor_update(arrays, noise)
    after = {k: p.data.tobytes() for k, p in agent.nets.encoder.params.items()}
    assert all(after[k] == before[k].tobytes() for k in before)

    agent.critic_update(arrays, noise)
    moved = {k: p.data.tobytes() for k, p in agent.nets.encoder.params.items()}
    assert any(moved[k] != before[k].tobytes() for k in before)


@criterion("soft-update-exact")
def test_soft_update_exact():
    """Target blends at tau 0.01 (critic) and 0.05 (encoder) must match
    the reference blend bit for bit in float32."""
    rng = np.random.default_rng(17)
    nets = make_nets(rng, 16, 16, hidden_dim=16, latent_dim=8)
    # drive online weights away from the freshly cloned targets
    for p in list(nets.encoder.params.values()) + list(nets.critic.params.values()):
        p.data = (p.data + rng.standard_normal(p.data.shape).astype(np.float32) * 0.1).astype(
            np.float32
        )
    enc_t = {k: p.data.copy() for k, p in nets.encoder_target.params.items()}
    cri_t = {k: p.data.copy() for k, p in nets.critic_target.params.items()}
    nets.soft_update_targets(tau_q=0.01, tau_enc=0.05)
    for k, p in nets.critic_target.params.items():
        want = oracles.oracle_soft_update(cri_t[k], nets.critic.params[k].data, 0.01)
        assert p.data.tobytes() == want.tobytes()
    for k, p in nets.encoder_target.params.items():
        want = oracles.oracle_soft_update(enc_t[k], nets.encoder.params[k].data, 0.05)
        assert p.data.tobytes() == want.tobytes()


@criterion("replay-buffer", budget_s=10.0)
def test_replay_buffer():
    """Oldest-first eviction at the shipped capacity, full index coverage
    under sampling, and no draws from unfilled slots."""
    buf = ReplayBuffer(capacity=20000)
    for i in range(20050):
        buf.add(make_transition(i))
    assert len(buf) == 20000
    tags = [int(t.reward) for t in buf._slots]
    assert sorted(tags) == list(range(50, 20050))
    # ring layout: the 50 overwrites landed on the oldest slots, in order
    assert tags[:50] == list(range(20000, 20050))
    assert tags[50:] == list(range(50, 20000))

    buf = ReplayBuffer(capacity=100)
    for i in range(100):
        buf.add(make_transition(i))
    rng = np.random.default_rng(29)
    seen = set()
    for _ in range(10_000):  # 1e5 draws in batches of 10
        for t in buf.sample(10, rng):
            seen.add(int(t.reward))
    assert seen == set(range(100))

    buf = ReplayBuffer(capacity=100)
    for i in range(60):
        buf.add(make_transition(i))
    drawn = set()
    for _ in range(500):
        for t in buf.sample(20, rng):
            drawn.add(int(t.reward))
    assert drawn == set(range(60))  # nothing phantom, everything reachable


@criterion("harness-validity", budget_s=60.0)
def test_harness_validity():
    """A straight-line flyer in an empty world must register as near
    perfect: every run a success, spl >= 0.99, under 0.1 m extra path."""
    spec = ScenarioSpec(kind="random", n_uavs=1, density=0.002)
    report, _ = run_evaluation(
        StraightLinePolicy(dt=0.1), spec, episodes=100, seed=123, dt=0.1, t_max=300
    )
    assert report.success_rate == 1.0
    assert report.spl >= 0.99
    assert report.extra_distance_mean < 0.1


@criterion("scenario-geometry")
def test_scenario_geometry():
    """Circle starts face an antipodal goal 24 m away; random-scenario
    workspaces hit the requested vehicle density exactly."""
    for seed in (0, 1, 2):
        world = generate_scenario(
            ScenarioSpec(kind="circle", n_uavs=8, circle_radius=12.0, seed=seed)
        )
        for u in world.uavs:
            assert abs(float(np.linalg.norm(u.goal - u.position)) - 24.0) < 1e-9
    for density in (0.04, 0.06, 0.1):
        world = generate_scenario(
            ScenarioSpec(kind="random", n_uavs=12, density=density, seed=5)
        )
        want = 12 / density
        assert abs(world.workspace.volume - want) <= 1e-12 * want


@criterion("determinism", budget_s=600.0)
def test_determinism():
    """Two runs of the same seeded training config must write identical
    metrics logs, byte for byte."""
    cfg = TrainConfig(
        n_uavs=2, density=0.004, image_size=16, hidden_dim=32, latent_dim=16,
        batch_size=32, buffer_capacity=2000, t_max=30, warmup_steps=100,
        update_times=2, max_episodes=5, checkpoint_every=100, seed=7,
    )
    with tempfile.TemporaryDirectory() as tmp:
        train(cfg, f"{tmp}/a")
        train(cfg, f"{tmp}/b")
        a = Path(tmp, "a", "metrics.csv").read_bytes()
        b = Path(tmp, "b", "metrics.csv").read_bytes()
        assert a == b
        assert a.count(b"\n") == 6  # header plus one row per episode


@criterion("smoke-training-trend", budget_s=1800.0)
def test_smoke_training_trend():
    """50 episodes of the real trainer at 32x32 with two vehicles: mean
    reward over the last 10 episodes must beat the first 10, and the
    reconstruction loss at episode 50 must be under half its episode-5
    value."""
    cfg = TrainConfig(
        n_uavs=2, density=0.0008, image_size=32, hidden_dim=128, latent_dim=50,
        batch_size=64, buffer_capacity=20000, t_max=200, warmup_steps=1000,
        update_times=20, max_episodes=50, checkpoint_every=100, seed=0,
    )
    with tempfile.TemporaryDirectory() as tmp:
        train(cfg, tmp)
        rows = np.genfromtxt(Path(tmp, "metrics.csv"), delimiter=",", names=True)
    rewards = rows["mean_reward"]
    j_rae = rows["j_rae"]
    assert rewards.shape[0] == 50
    assert float(np.mean(rewards[-10:])) > float(np.mean(rewards[:10]))
    assert float(j_rae[49]) < 0.5 * float(j_rae[4])
