"""Policy networks: convolutional encoder, mirrored decoder, squashed
Gaussian actor, twin Q critic, and their target copies.

The encoder compresses the normalized depth stack to a 50-dim latent
(layer norm + tanh). Actor and critic run on latent + goal + velocity
columns. Gradient routing is the caller's job: the critic objective
trains the encoder, the actor objective must not (it sees a detached
latent), and the autoencoder objective trains encoder and decoder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from uavnav import autodiff as ad
from uavnav.world import ACTION_DIM, ACTION_HIGH, ACTION_LOW, ContractViolation

LATENT_DIM = 50
CONV_FILTERS = 32
LOG_STD_MIN = -10.0
LOG_STD_MAX = 2.0

ACTION_CENTER = (ACTION_HIGH + ACTION_LOW) / 2.0
ACTION_HALF = (ACTION_HIGH - ACTION_LOW) / 2.0

# body-frame goal offset (3) plus current velocity command (3)
GOAL_VEL_DIM = 6


def orthogonal_init(rng, d_in, d_out):
    """Orthogonal weight matrix (d_in, d_out)."""
    a = rng.standard_normal((max(d_in, d_out), min(d_in, d_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))[None, :]
    w = q if d_in >= d_out else q.T
    return np.ascontiguousarray(w[:d_in, :d_out], dtype=np.float32)


def fan_in_uniform_init(rng, shape):
    """U(-b, b) with b = 1/sqrt(fan_in); used for conv kernels."""
    fan_in = int(np.prod(shape[1:]))
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape).astype(np.float32)


def encoder_conv_shapes(height, width):
    """Spatial sizes after each of the four valid 3x3 convs
    (stride 2 first, then three stride 1)."""
    h, w = (height - 3) // 2 + 1, (width - 3) // 2 + 1
    shapes = [(h, w)]
    for _ in range(3):
        h, w = h - 2, w - 2
        shapes.append((h, w))
    if shapes[-1][0] < 1 or shapes[-1][1] < 1:
        raise ContractViolation(
            f"image {height}x{width} too small for the conv stack (min 15x15)"
        )
    return shapes


class Encoder:
    """Depth stack (N, 3, H, W) -> latent (N, 50), entries in (-1, 1)."""

    def __init__(self, rng, height, width, latent_dim=LATENT_DIM, in_channels=3):
        self.height = height
        self.width = width
        self.latent_dim = latent_dim
        self.in_channels = in_channels
        self.conv_shapes = encoder_conv_shapes(height, width)
        h4, w4 = self.conv_shapes[-1]
        self.flat_dim = CONV_FILTERS * h4 * w4
        f = CONV_FILTERS
        self.params = {
            "conv1.kernel": ad.parameter(fan_in_uniform_init(rng, (f, in_channels, 3, 3))),
            "conv1.bias": ad.parameter(np.zeros(f, dtype=np.float32)),
            "conv2.kernel": ad.parameter(fan_in_uniform_init(rng, (f, f, 3, 3))),
            "conv2.bias": ad.parameter(np.zeros(f, dtype=np.float32)),
            "conv3.kernel": ad.parameter(fan_in_uniform_init(rng, (f, f, 3, 3))),
            "conv3.bias": ad.parameter(np.zeros(f, dtype=np.float32)),
            "conv4.kernel": ad.parameter(fan_in_uniform_init(rng, (f, f, 3, 3))),
            "conv4.bias": ad.parameter(np.zeros(f, dtype=np.float32)),
            "fc.weight": ad.parameter(orthogonal_init(rng, self.flat_dim, latent_dim)),
            "fc.bias": ad.parameter(np.zeros(latent_dim, dtype=np.float32)),
            "ln.gain": ad.parameter(np.ones(latent_dim, dtype=np.float32)),
            "ln.shift": ad.parameter(np.zeros(latent_dim, dtype=np.float32)),
        }

    def forward(self, x):
        p = self.params
        h = ad.relu(ad.add_channel_bias(ad.conv2d(x, p["conv1.kernel"], 2), p["conv1.bias"]))
        h = ad.relu(ad.add_channel_bias(ad.conv2d(h, p["conv2.kernel"], 1), p["conv2.bias"]))
        h = ad.relu(ad.add_channel_bias(ad.conv2d(h, p["conv3.kernel"], 1), p["conv3.bias"]))
        h = ad.relu(ad.add_channel_bias(ad.conv2d(h, p["conv4.kernel"], 1), p["conv4.bias"]))
        flat = ad.reshape(h, (h.shape[0], self.flat_dim))
        z = ad.dense(flat, p["fc.weight"], p["fc.bias"])
        return ad.tanh(ad.layer_norm(z, p["ln.gain"], p["ln.shift"]))


class Decoder:
    """Latent (N, 50) -> reconstructed depth stack (N, 3, H, W)."""

    def __init__(self, rng, encoder):
        self.encoder = encoder
        f = CONV_FILTERS
        c = encoder.in_channels
        self.params = {
            "fc.weight": ad.parameter(orthogonal_init(rng, encoder.latent_dim, encoder.flat_dim)),
            "fc.bias": ad.parameter(np.zeros(encoder.flat_dim, dtype=np.float32)),
            "tconv1.kernel": ad.parameter(fan_in_uniform_init(rng, (f, f, 3, 3))),
            "tconv1.bias": ad.parameter(np.zeros(f, dtype=np.float32)),
            "tconv2.kernel": ad.parameter(fan_in_uniform_init(rng, (f, f, 3, 3))),
            "tconv2.bias": ad.parameter(np.zeros(f, dtype=np.float32)),
            "tconv3.kernel": ad.parameter(fan_in_uniform_init(rng, (f, f, 3, 3))),
            "tconv3.bias": ad.parameter(np.zeros(f, dtype=np.float32)),
            "tconv4.kernel": ad.parameter(fan_in_uniform_init(rng, (f, c, 3, 3))),
            "tconv4.bias": ad.parameter(np.zeros(c, dtype=np.float32)),
        }

    def forward(self, z):
        p = self.params
        enc = self.encoder
        (h1, w1), (h2, w2), (h3, w3), (h4, w4) = enc.conv_shapes
        n = z.shape[0]
        h = ad.relu(ad.dense(z, p["fc.weight"], p["fc.bias"]))
        h = ad.reshape(h, (n, CONV_FILTERS, h4, w4))
        h = ad.relu(ad.add_channel_bias(ad.conv2d_transpose(h, p["tconv1.kernel"], 1, (h3, w3)), p["tconv1.bias"]))
        h = ad.relu(ad.add_channel_bias(ad.conv2d_transpose(h, p["tconv2.kernel"], 1, (h2, w2)), p["tconv2.bias"]))
        h = ad.relu(ad.add_channel_bias(ad.conv2d_transpose(h, p["tconv3.kernel"], 1, (h1, w1)), p["tconv3.bias"]))
        return ad.add_channel_bias(
            ad.conv2d_transpose(h, p["tconv4.kernel"], 2, (enc.height, enc.width)),
            p["tconv4.bias"],
        )

    def weight_decay_term(self):
        """Sum of squared decoder parameters, as a graph node."""
        total = None
        for p in self.params.values():
            flat = ad.reshape(p, (1, p.size))
            contrib = ad.sum_all(ad.mul(flat, flat))
            total = contrib if total is None else ad.add(total, contrib)
        return total


class Actor:
    """Columns (N, 56) -> squashed Gaussian over 3 command dimensions."""

    def __init__(self, rng, hidden_dim, in_dim=LATENT_DIM + GOAL_VEL_DIM):
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim
        self.params = {
            "fc1.weight": ad.parameter(orthogonal_init(rng, in_dim, hidden_dim)),
            "fc1.bias": ad.parameter(np.zeros(hidden_dim, dtype=np.float32)),
            "fc2.weight": ad.parameter(orthogonal_init(rng, hidden_dim, hidden_dim)),
            "fc2.bias": ad.parameter(np.zeros(hidden_dim, dtype=np.float32)),
            "mean.weight": ad.parameter(orthogonal_init(rng, hidden_dim, ACTION_DIM)),
            "mean.bias": ad.parameter(np.zeros(ACTION_DIM, dtype=np.float32)),
            "log_std.weight": ad.parameter(orthogonal_init(rng, hidden_dim, ACTION_DIM)),
            "log_std.bias": ad.parameter(np.zeros(ACTION_DIM, dtype=np.float32)),
        }

    def forward(self, cols):
        p = self.params
        h = ad.relu(ad.dense(cols, p["fc1.weight"], p["fc1.bias"]))
        h = ad.relu(ad.dense(h, p["fc2.weight"], p["fc2.bias"]))
        mean = ad.dense(h, p["mean.weight"], p["mean.bias"])
        raw = ad.dense(h, p["log_std.weight"], p["log_std.bias"])
        # smooth clamp of the log stddev into its legal band
        log_std = ad.add_scalar(
            ad.scale(ad.add_scalar(ad.tanh(raw), 1.0), 0.5 * (LOG_STD_MAX - LOG_STD_MIN)),
            LOG_STD_MIN,
        )
        return mean, log_std

    def sample(self, cols, noise):
        """Reparameterized draw. noise is (N, 3) standard normal supplied by
        the caller so the randomness source stays injectable.

        Returns (squashed, log_prob) with squashed in (-1, 1) per dimension
        and log_prob the per-row density of the squashed variable.
        """
        mean, log_std = self.forward(cols)
        u = ad.add(mean, ad.mul(ad.exp(log_std), ad.constant(noise)))
        logp = ad.gaussian_logprob(u, mean, log_std)
        return ad.tanh(u), logp

    def mean_action(self, cols):
        mean, _ = self.forward(cols)
        return ad.tanh(mean)


class QHead:
    def __init__(self, rng, in_dim, hidden_dim):
        self.params = {
            "fc1.weight": ad.parameter(orthogonal_init(rng, in_dim, hidden_dim)),
            "fc1.bias": ad.parameter(np.zeros(hidden_dim, dtype=np.float32)),
            "fc2.weight": ad.parameter(orthogonal_init(rng, hidden_dim, hidden_dim)),
            "fc2.bias": ad.parameter(np.zeros(hidden_dim, dtype=np.float32)),
            "out.weight": ad.parameter(orthogonal_init(rng, hidden_dim, 1)),
            "out.bias": ad.parameter(np.zeros(1, dtype=np.float32)),
        }

    def forward(self, cols):
        p = self.params
        h = ad.relu(ad.dense(cols, p["fc1.weight"], p["fc1.bias"]))
        h = ad.relu(ad.dense(h, p["fc2.weight"], p["fc2.bias"]))
        return ad.dense(h, p["out.weight"], p["out.bias"])


class Critic:
    """Twin independent Q heads over columns (N, 59) = state ⊕ action."""

    def __init__(self, rng, hidden_dim, state_dim=LATENT_DIM + GOAL_VEL_DIM):
        in_dim = state_dim + ACTION_DIM
        self.q1 = QHead(rng, in_dim, hidden_dim)
        self.q2 = QHead(rng, in_dim, hidden_dim)
        self.params = {}
        for name, p in self.q1.params.items():
            self.params[f"q1.{name}"] = p
        for name, p in self.q2.params.items():
            self.params[f"q2.{name}"] = p

    def forward(self, state_cols, action_cols):
        cols = ad.concat_cols([state_cols, action_cols])
        return self.q1.forward(cols), self.q2.forward(cols)


def squashed_to_env(squashed):
    """Map (-1, 1) network output to command bounds, per dimension."""
    return ACTION_CENTER + ACTION_HALF * np.asarray(squashed, dtype=np.float64)


def env_to_squashed(action):
    """Inverse map; used to feed replayed env actions to the critic."""
    return (np.asarray(action, dtype=np.float64) - ACTION_CENTER) / ACTION_HALF


def squashed_to_env_graph(squashed):
    """Graph version of squashed_to_env for actor-sampled actions."""
    return ad.add_const_rowvec(ad.mul_const_rowvec(squashed, ACTION_HALF), ACTION_CENTER)


def soft_update(target_params, online_params, tau):
    """target <- (1 - tau) * target + tau * online, in 32-bit arithmetic."""
    if not 0.0 < tau <= 1.0:
        raise ContractViolation(f"tau must be in (0, 1], got {tau}")
    if target_params.keys() != online_params.keys():
        raise ContractViolation("target and online parameter sets differ")
    for name, t in target_params.items():
        o = online_params[name]
        if t.data.shape != o.data.shape:
            raise ContractViolation(f"shape mismatch for {name}")
        t.data = (1.0 - tau) * t.data + tau * o.data


def clone_params(params):
    """Detached deep copies, e.g. for target networks."""
    return {name: ad.constant(p.data.copy()) for name, p in params.items()}


class TargetCritic:
    """Same wiring as Critic, evaluated with the target parameter set."""

    def __init__(self, critic):
        self.params = clone_params(critic.params)

    def _head(self, prefix, cols):
        p = self.params
        h = ad.relu(ad.dense(cols, p[f"{prefix}.fc1.weight"], p[f"{prefix}.fc1.bias"]))
        h = ad.relu(ad.dense(h, p[f"{prefix}.fc2.weight"], p[f"{prefix}.fc2.bias"]))
        return ad.dense(h, p[f"{prefix}.out.weight"], p[f"{prefix}.out.bias"])

    def forward(self, state_cols, action_cols):
        cols = ad.concat_cols([state_cols, action_cols])
        return self._head("q1", cols), self._head("q2", cols)


class TargetEncoder:
    """Encoder wiring evaluated with a target parameter set."""

    def __init__(self, encoder):
        self.encoder = encoder
        self.params = clone_params(encoder.params)

    def forward(self, x):
        live = self.encoder.params
        try:
            self.encoder.params = self.params
            return self.encoder.forward(x)
        finally:
            self.encoder.params = live


@dataclass
class AgentNets:
    encoder: Encoder
    decoder: Decoder
    actor: Actor
    critic: Critic
    encoder_target: TargetEncoder
    critic_target: TargetCritic

    def soft_update_targets(self, tau_q, tau_enc):
        soft_update(self.critic_target.params, self.critic.params, tau_q)
        soft_update(self.encoder_target.params, self.encoder.params, tau_enc)

    def all_params(self):
        """Flat name -> Tensor map over every parameter set, targets included."""
        groups = {
            "encoder": self.encoder.params,
            "decoder": self.decoder.params,
            "actor": self.actor.params,
            "critic": self.critic.params,
            "encoder_target": self.encoder_target.params,
            "critic_target": self.critic_target.params,
        }
        flat = {}
        for prefix, params in groups.items():
            for name, p in params.items():
                flat[f"{prefix}.{name}"] = p
        return flat


def make_nets(rng, height, width, hidden_dim, latent_dim=LATENT_DIM):
    encoder = Encoder(rng, height, width, latent_dim)
    decoder = Decoder(rng, encoder)
    actor = Actor(rng, hidden_dim, in_dim=latent_dim + GOAL_VEL_DIM)
    critic = Critic(rng, hidden_dim, state_dim=latent_dim + GOAL_VEL_DIM)
    return AgentNets(
        encoder=encoder,
        decoder=decoder,
        actor=actor,
        critic=critic,
        encoder_target=TargetEncoder(encoder),
        critic_target=TargetCritic(critic),
    )
