"""Adam optimizer over named parameter tensors."""

from __future__ import annotations

import numpy as np

from uavnav.autodiff import Tensor


class Adam:
    """Adam with bias correction. State is keyed by parameter name so it
    can be saved and restored alongside the parameters."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = dict(params)
        for name, p in self.params.items():
            if not isinstance(p, Tensor) or not p.requires_grad:
                raise ValueError(f"parameter {name!r} is not a trainable tensor")
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        """Apply one update to every parameter with a populated gradient."""
        self.step_count += 1
        t = self.step_count
        b1 = self.beta1
        b2 = self.beta2
        bc1 = 1.0 - b1 ** t
        bc2 = 1.0 - b2 ** t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            mhat = m / bc1
            vhat = v / bc2
            p.data -= (self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(np.float32)

    def state_arrays(self):
        """Flat name -> array mapping of the optimizer state for checkpointing."""
        out = {"step_count": np.array([self.step_count], dtype=np.float32)}
        for name in self.params:
            out[f"m.{name}"] = self.m[name]
            out[f"v.{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays):
        self.step_count = int(arrays["step_count"][0])
        for name in self.params:
            # copied so a donor optimizer never shares moment buffers
            self.m[name] = arrays[f"m.{name}"].astype(np.float32, copy=True)
            self.v[name] = arrays[f"v.{name}"].astype(np.float32, copy=True)
