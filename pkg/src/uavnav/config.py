"""Training configuration: dataclass defaults, sectioned key = value file
round-trip, and command-line overrides.

Unknown keys anywhere are rejected by exact name so typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields

from uavnav.world import ContractViolation


@dataclass
class TrainConfig:
    # scenario
    kind: str = "random"
    n_uavs: int = 10
    density: float = 0.06
    circle_radius: float = 12.0
    altitude: float = 5.0
    # camera
    image_size: int = 64
    fov_degrees: float = 90.0
    max_depth: float = 20.0
    # networks
    hidden_dim: int = 256
    latent_dim: int = 50
    # training
    buffer_capacity: int = 20_000
    batch_size: int = 128
    max_episodes: int = 200
    update_times: int = 400
    discount: float = 0.99
    critic_lr: float = 1e-3
    critic_target_update_freq: int = 2
    tau_q: float = 0.01
    tau_enc: float = 0.05
    actor_lr: float = 1e-3
    actor_update_freq: int = 2
    ae_lr: float = 1e-3
    alpha_lr: float = 1e-3
    init_temperature: float = 0.1
    target_entropy: float = -3.0
    latent_l2_weight: float = 1e-6
    decoder_weight_decay: float = 1e-7
    t_max: int = 500
    dt: float = 0.1
    warmup_steps: int = 1000
    checkpoint_every: int = 10
    seed: int = 0
    # reward
    r_arrival: float = 50.0
    r_collision: float = -10.0
    w_goal: float = 3.0
    w_avoid: float = -0.05
    d_safe: float = 5.0

    def validate(self):
        if not 0.0 < self.discount < 1.0:
            raise ContractViolation(f"discount must be in (0, 1), got {self.discount}")
        if self.batch_size > self.buffer_capacity:
            raise ContractViolation(
                f"batch_size {self.batch_size} exceeds buffer_capacity {self.buffer_capacity}"
            )
        for key in ("critic_lr", "actor_lr", "ae_lr", "alpha_lr", "tau_q", "tau_enc", "dt"):
            if not getattr(self, key) > 0:
                raise ContractViolation(f"{key} must be positive, got {getattr(self, key)}")
        for key in ("n_uavs", "image_size", "hidden_dim", "latent_dim", "batch_size",
                    "max_episodes", "t_max", "critic_target_update_freq", "actor_update_freq"):
            if getattr(self, key) < 1:
                raise ContractViolation(f"{key} must be >= 1, got {getattr(self, key)}")
        if self.update_times < 0 or self.warmup_steps < 0:
            raise ContractViolation("update_times and warmup_steps must be >= 0")
        if self.kind not in ("random", "circle"):
            raise ContractViolation(f"unknown scenario kind {self.kind!r}")
        return self


SECTIONS = {
    "scenario": ("kind", "n_uavs", "density", "circle_radius", "altitude"),
    "camera": ("image_size", "fov_degrees", "max_depth"),
    "networks": ("hidden_dim", "latent_dim"),
    "training": (
        "buffer_capacity", "batch_size", "max_episodes", "update_times", "discount",
        "critic_lr", "critic_target_update_freq", "tau_q", "tau_enc", "actor_lr",
        "actor_update_freq", "ae_lr", "alpha_lr", "init_temperature", "target_entropy",
        "latent_l2_weight", "decoder_weight_decay", "t_max", "dt", "warmup_steps",
        "checkpoint_every", "seed",
    ),
    "reward": ("r_arrival", "r_collision", "w_goal", "w_avoid", "d_safe"),
}

_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}
_FIELD_SECTION = {key: section for section, keys in SECTIONS.items() for key in keys}


def _parse_value(key, raw):
    kind = _FIELD_TYPES[key]
    try:
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        return str(raw)
    except ValueError as exc:
        raise ContractViolation(f"bad value for {key!r}: {raw!r}") from exc


def load_config(path):
    """Read a sectioned key = value file into a validated TrainConfig."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ContractViolation(f"config file not found: {path}")
    cfg = TrainConfig()
    for section in parser.sections():
        if section not in SECTIONS:
            raise ContractViolation(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ContractViolation(f"unknown key {key!r} in section [{section}]")
            setattr(cfg, key, _parse_value(key, raw))
    return cfg.validate()


def save_config(cfg, path):
    """Write the full configuration, every section and key explicit.

    repr keeps float round-trips exact; strings go through verbatim.
    """
    parser = configparser.ConfigParser()
    for section, keys in SECTIONS.items():
        rendered = {}
        for key in keys:
            value = getattr(cfg, key)
            rendered[key] = value if isinstance(value, str) else repr(value)
        parser[section] = rendered
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def apply_overrides(cfg, pairs):
    """Apply key=value strings (field names are unique across sections)."""
    for pair in pairs:
        if "=" not in pair:
            raise ContractViolation(f"override {pair!r} is not key=value")
        key, raw = (part.strip() for part in pair.split("=", 1))
        if key not in _FIELD_SECTION:
            raise ContractViolation(f"unknown config key {key!r}")
        setattr(cfg, key, _parse_value(key, raw))
    return cfg.validate()
