"""Training loop: collect experience from all vehicles into one shared
buffer, then run batched critic / actor / autoencoder updates.

Execution is decentralized (every vehicle acts from its own observation
through the same policy); learning is centralized (one buffer, one update
stream). Update cadence: the critic and autoencoder step every iteration,
the actor, temperature, and target networks every second one.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from uavnav import autodiff as ad
from uavnav.camera import CameraModel, min_depth, render_depth
from uavnav.checkpoint import load_arrays, save_arrays
from uavnav.config import TrainConfig, save_config
from uavnav.nets import (
    make_nets,
    env_to_squashed,
    squashed_to_env,
)
from uavnav.observation import assemble_observation
from uavnav.optim import Adam
from uavnav.replay import ReplayBuffer, Transition
from uavnav.rewards import RewardParams, avoid_reward, goal_reward, total_reward
from uavnav.scenarios import ScenarioGenerationError, ScenarioSpec, generate_scenario
from uavnav.world import (
    ACTION_HIGH,
    ACTION_LOW,
    ContractViolation,
    Status,
    advance,
    mark_timeouts,
)

METRICS_COLUMNS = ("episode", "env_steps", "mean_reward", "j_q", "j_pi", "j_rae", "alpha")


@dataclass
class EpisodeStats:
    uav_rewards: list
    steps: int
    statuses: list

    @property
    def mean_reward(self):
        return float(np.mean(self.uav_rewards))


def reward_params_from_config(config):
    return RewardParams(
        r_arrival=config.r_arrival,
        r_collision=config.r_collision,
        w_goal=config.w_goal,
        w_avoid=config.w_avoid,
        d_safe=config.d_safe,
    )


def scenario_spec_from_config(config, seed):
    return ScenarioSpec(
        kind=config.kind,
        n_uavs=config.n_uavs,
        density=config.density,
        circle_radius=config.circle_radius,
        altitude=config.altitude,
        seed=seed,
    )


class Agent:
    """Owns the networks, optimizers, temperature, and buffer."""

    def __init__(self, config: TrainConfig):
        config.validate()
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.nets = make_nets(
            self.rng, config.image_size, config.image_size, config.hidden_dim, config.latent_dim
        )
        self.log_alpha = ad.parameter(
            np.array([math.log(config.init_temperature)], dtype=np.float32)
        )
        self.camera = CameraModel(
            width=config.image_size,
            height=config.image_size,
            horizontal_fov=math.radians(config.fov_degrees),
            max_depth=config.max_depth,
        )
        self.reward_params = reward_params_from_config(config)
        self.buffer = ReplayBuffer(config.buffer_capacity)

        critic_params = {f"critic.{k}": p for k, p in self.nets.critic.params.items()}
        critic_params.update({f"encoder.{k}": p for k, p in self.nets.encoder.params.items()})
        self.critic_opt = Adam(critic_params, lr=config.critic_lr)
        self.actor_opt = Adam(
            {f"actor.{k}": p for k, p in self.nets.actor.params.items()}, lr=config.actor_lr
        )
        ae_params = {f"encoder.{k}": p for k, p in self.nets.encoder.params.items()}
        ae_params.update({f"decoder.{k}": p for k, p in self.nets.decoder.params.items()})
        self.ae_opt = Adam(ae_params, lr=config.ae_lr)
        self.alpha_opt = Adam({"log_alpha": self.log_alpha}, lr=config.alpha_lr)

        self.update_count = 0
        self.env_steps = 0

    @property
    def alpha(self):
        return float(np.exp(self.log_alpha.data[0]))

    # ------------------------------------------------------------------
    # acting

    def _state_cols(self, observations):
        stack = np.stack([o.depth_stack for o in observations])
        extras = np.stack(
            [np.concatenate([o.rel_goal, o.velocity]) for o in observations]
        ).astype(np.float32)
        latent = self.nets.encoder.forward(ad.constant(stack))
        return ad.concat_cols([latent, ad.constant(extras)])

    def act(self, observations, mode="sample"):
        """Batched action selection; (len(observations), 3) command array."""
        with ad.no_grad():
            state = self._state_cols(observations)
            if mode == "sample":
                noise = self.rng.standard_normal((len(observations), 3))
                squashed, _ = self.nets.actor.sample(state, noise)
            elif mode == "mean":
                squashed = self.nets.actor.mean_action(state)
            else:
                raise ContractViolation(f"unknown act mode {mode!r}")
        return squashed_to_env(squashed.data)

    # ------------------------------------------------------------------
    # collection

    def collect_episode(self, world):
        """Roll one episode, storing every vehicle's transitions in the
        shared buffer. Returns EpisodeStats."""
        config = self.config
        frames = []
        current_obs = []
        for i, uav in enumerate(world.uavs):
            frames.append([render_depth(world, i, self.camera)])
            current_obs.append(
                assemble_observation(frames[i], uav, self.camera.max_depth)
            )
        uav_rewards = [0.0 for _ in world.uavs]
        steps = 0
        for _ in range(config.t_max):
            active = [i for i, u in enumerate(world.uavs) if u.status is Status.ACTIVE]
            if not active:
                break
            if self.env_steps < config.warmup_steps:
                chosen = self.rng.uniform(ACTION_LOW, ACTION_HIGH, (len(active), 3))
            else:
                chosen = self.act([current_obs[i] for i in active], mode="sample")
            actions = [np.zeros(3) for _ in world.uavs]
            for row, i in enumerate(active):
                actions[i] = chosen[row]
            prev_dists = {i: world.uavs[i].goal_distance() for i in active}

            pairs, _ = advance(world, actions, config.dt)
            steps += 1
            collided = {i for pair in pairs for i in pair}

            for i in active:
                uav = world.uavs[i]
                frames[i].append(render_depth(world, i, self.camera))
                next_obs = assemble_observation(frames[i], uav, self.camera.max_depth)
                r = total_reward(
                    goal_reward(prev_dists[i], uav.goal_distance(), self.reward_params),
                    avoid_reward(
                        i in collided, min_depth(frames[i][-1]), self.reward_params
                    ),
                )
                done = uav.status in (Status.ARRIVED, Status.COLLIDED)
                self.buffer.add(
                    Transition(
                        obs=current_obs[i],
                        action=np.asarray(actions[i], dtype=np.float64).copy(),
                        reward=r,
                        next_obs=next_obs,
                        done=done,
                    )
                )
                uav_rewards[i] += r
                current_obs[i] = next_obs
                self.env_steps += 1
        mark_timeouts(world)
        return EpisodeStats(
            uav_rewards=uav_rewards,
            steps=steps,
            statuses=[u.status for u in world.uavs],
        )

    # ------------------------------------------------------------------
    # updates

    def _batch_arrays(self, batch):
        obs_stack = np.stack([t.obs.depth_stack for t in batch])
        obs_extra = np.stack(
            [np.concatenate([t.obs.rel_goal, t.obs.velocity]) for t in batch]
        ).astype(np.float32)
        next_stack = np.stack([t.next_obs.depth_stack for t in batch])
        next_extra = np.stack(
            [np.concatenate([t.next_obs.rel_goal, t.next_obs.velocity]) for t in batch]
        ).astype(np.float32)
        actions = np.stack([env_to_squashed(t.action) for t in batch]).astype(np.float32)
        rewards = np.array([[t.reward] for t in batch], dtype=np.float32)
        dones = np.array([[1.0 if t.done else 0.0] for t in batch], dtype=np.float32)
        return obs_stack, obs_extra, next_stack, next_extra, actions, rewards, dones

    def critic_update(self, arrays, noise):
        """One fit of both Q heads (and the encoder through them) to the
        soft Bellman target; the target is built without gradients."""
        config = self.config
        obs_stack, obs_extra, next_stack, next_extra, actions, rewards, dones = arrays
        with ad.no_grad():
            next_latent = self.nets.encoder.forward(ad.constant(next_stack))
            next_state = ad.concat_cols([next_latent, ad.constant(next_extra)])
            next_squashed, next_logp = self.nets.actor.sample(next_state, noise)
            tgt_latent = self.nets.encoder_target.forward(ad.constant(next_stack))
            tgt_state = ad.concat_cols([tgt_latent, ad.constant(next_extra)])
            q1_t, q2_t = self.nets.critic_target.forward(tgt_state, next_squashed)
            v_next = np.minimum(q1_t.data, q2_t.data) - self.alpha * next_logp.data[:, None]
            y = rewards + config.discount * (1.0 - dones) * v_next

        latent = self.nets.encoder.forward(ad.constant(obs_stack))
        state = ad.concat_cols([latent, ad.constant(obs_extra)])
        q1, q2 = self.nets.critic.forward(state, ad.constant(actions))
        target = ad.constant(y)
        e1 = ad.sub(q1, target)
        e2 = ad.sub(q2, target)
        loss = ad.add(ad.mean_all(ad.mul(e1, e1)), ad.mean_all(ad.mul(e2, e2)))
        self.critic_opt.zero_grad()
        ad.backward(loss)
        self.critic_opt.step()
        return loss.item()

    def actor_update(self, arrays, noise):
        """Policy step on a detached latent, then the temperature step.
        The encoder must come out bitwise identical."""
        config = self.config
        obs_stack, obs_extra, _, _, _, _, _ = arrays
        with ad.no_grad():
            latent = self.nets.encoder.forward(ad.constant(obs_stack))
        state = ad.concat_cols([ad.constant(latent.data), ad.constant(obs_extra)])
        squashed, logp = self.nets.actor.sample(state, noise)
        q1, q2 = self.nets.critic.forward(state, squashed)
        q_min = ad.minimum(q1, q2)
        logp_col = ad.reshape(logp, (logp.shape[0], 1))
        loss_pi = ad.mean_all(ad.sub(ad.scale(logp_col, self.alpha), q_min))
        self.actor_opt.zero_grad()
        ad.backward(loss_pi)
        self.actor_opt.step()

        # temperature: pull entropy toward the target
        entropy_gap = ad.constant(-logp.data - np.float32(config.target_entropy))
        alpha_t = ad.exp(self.log_alpha)
        loss_alpha = ad.mean_all(ad.scale_by(alpha_t, entropy_gap))
        self.alpha_opt.zero_grad()
        ad.backward(loss_alpha)
        self.alpha_opt.step()
        return loss_pi.item()

    def autoencoder_update(self, arrays):
        """Reconstruction step with latent L2 and decoder weight penalties;
        trains encoder and decoder together."""
        config = self.config
        obs_stack = arrays[0]
        latent = self.nets.encoder.forward(ad.constant(obs_stack))
        recon = self.nets.decoder.forward(latent)
        err = ad.sub(recon, ad.constant(obs_stack))
        mse = ad.mean_all(ad.mul(err, err))
        latent_l2 = ad.mean_all(ad.sum_rows(ad.mul(latent, latent)))
        decay = self.nets.decoder.weight_decay_term()
        loss = ad.add(
            mse,
            ad.add(
                ad.scale(latent_l2, config.latent_l2_weight),
                ad.scale(decay, config.decoder_weight_decay),
            ),
        )
        self.ae_opt.zero_grad()
        ad.backward(loss)
        self.ae_opt.step()
        return loss.item()

    def update_iteration(self):
        """One full gradient iteration at the configured cadences.

        Returns (j_q, j_pi or None, j_rae).
        """
        config = self.config
        batch = self.buffer.sample(config.batch_size, self.rng)
        arrays = self._batch_arrays(batch)
        critic_noise = self.rng.standard_normal((config.batch_size, 3))
        j_q = self.critic_update(arrays, critic_noise)
        j_pi = None
        if self.update_count % config.actor_update_freq == 0:
            actor_noise = self.rng.standard_normal((config.batch_size, 3))
            j_pi = self.actor_update(arrays, actor_noise)
        if self.update_count % config.critic_target_update_freq == 0:
            self.nets.soft_update_targets(config.tau_q, config.tau_enc)
        j_rae = self.autoencoder_update(arrays)
        self.update_count += 1
        return j_q, j_pi, j_rae

    # ------------------------------------------------------------------
    # persistence

    def save(self, path):
        arrays = dict(self.nets.all_params())
        arrays = {name: p.data for name, p in arrays.items()}
        arrays["log_alpha"] = self.log_alpha.data
        for prefix, opt in (
            ("critic_opt", self.critic_opt),
            ("actor_opt", self.actor_opt),
            ("ae_opt", self.ae_opt),
            ("alpha_opt", self.alpha_opt),
        ):
            for name, arr in opt.state_arrays().items():
                arrays[f"{prefix}.{name}"] = arr
        arrays["counters"] = np.array(
            [self.update_count, self.env_steps], dtype=np.float32
        )
        save_arrays(path, arrays)

    def load(self, path):
        arrays = load_arrays(path)
        params = self.nets.all_params()
        for name, p in params.items():
            if name not in arrays:
                raise ContractViolation(f"checkpoint missing parameter {name}")
            if arrays[name].shape != p.data.shape:
                raise ContractViolation(
                    f"checkpoint shape mismatch for {name}: "
                    f"{arrays[name].shape} vs {p.data.shape}"
                )
            p.data = np.ascontiguousarray(arrays[name])
        self.log_alpha.data = np.ascontiguousarray(arrays["log_alpha"])
        for prefix, opt in (
            ("critic_opt", self.critic_opt),
            ("actor_opt", self.actor_opt),
            ("ae_opt", self.ae_opt),
            ("alpha_opt", self.alpha_opt),
        ):
            sub = {
                name[len(prefix) + 1 :]: arr
                for name, arr in arrays.items()
                if name.startswith(prefix + ".")
            }
            opt.load_state_arrays(sub)
        self.update_count = int(arrays["counters"][0])
        self.env_steps = int(arrays["counters"][1])


def _format_metric(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return repr(float(value))


def train(config: TrainConfig, out_dir):
    """Full training run: returns the Agent; writes metrics log, config
    echo, and periodic checkpoints into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    save_config(config, os.path.join(out_dir, "config.ini"))
    agent = Agent(config)
    metrics_path = os.path.join(out_dir, "metrics.csv")
    with open(metrics_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")

    for episode in range(config.max_episodes):
        # a rare unlucky seed can exhaust the placement sampler; retry with
        # fresh (still deterministic) seeds a few times before giving up
        world = None
        for _ in range(20):
            scenario_seed = int(agent.rng.integers(0, 2**63))
            try:
                world = generate_scenario(scenario_spec_from_config(config, scenario_seed))
                break
            except ScenarioGenerationError:
                continue
        if world is None:
            raise ScenarioGenerationError(
                f"could not generate a scenario for episode {episode} in 20 tries"
            )
        stats = agent.collect_episode(world)

        j_qs, j_pis, j_raes = [], [], []
        if len(agent.buffer) >= max(config.warmup_steps, config.batch_size):
            try:
                for _ in range(config.update_times):
                    j_q, j_pi, j_rae = agent.update_iteration()
                    j_qs.append(j_q)
                    if j_pi is not None:
                        j_pis.append(j_pi)
                    j_raes.append(j_rae)
            except ad.NonFiniteError as exc:
                dump = os.path.join(out_dir, "abort.txt")
                with open(dump, "w", encoding="utf-8") as fh:
                    fh.write(
                        f"non-finite loss at episode {episode}, "
                        f"update {agent.update_count}: {exc}\n"
                    )
                raise

        row = (
            str(episode),
            str(agent.env_steps),
            _format_metric(stats.mean_reward),
            _format_metric(float(np.mean(j_qs)) if j_qs else None),
            _format_metric(float(np.mean(j_pis)) if j_pis else None),
            _format_metric(float(np.mean(j_raes)) if j_raes else None),
            _format_metric(agent.alpha),
        )
        with open(metrics_path, "a", encoding="utf-8") as fh:
            fh.write(",".join(row) + "\n")

        if (episode + 1) % config.checkpoint_every == 0 or episode == config.max_episodes - 1:
            agent.save(os.path.join(out_dir, f"checkpoint_ep{episode:04d}.bin"))
            agent.save(os.path.join(out_dir, "checkpoint.bin"))
    return agent
