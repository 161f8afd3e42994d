"""Reverse-mode automatic differentiation over dense float32 arrays.

Small by design: exactly the operations the policy/critic/autoencoder
networks need. Tensors wrap contiguous float32 numpy arrays; every op
validates finiteness of its output and records a backward closure.
Broadcasting is limited to bias-style adds, constant row vectors, and
row-wise reductions.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numpy as np

from uavnav import _kernels

LOG_2PI = math.log(2.0 * math.pi)


class NonFiniteError(ArithmeticError):
    """Raised when an operation produces NaN or Inf entries."""


class GraphError(ValueError):
    """Raised on malformed computation graphs (shape mismatch, cycles)."""


_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled():
    return _grad_enabled


def _as_f32(values):
    arr = np.ascontiguousarray(values, dtype=np.float32)
    return arr


def _check_finite(arr, op_name):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values produced by {op_name}")


class Tensor:
    """Value node in the computation graph.

    ``data`` is a contiguous float32 array; ``grad`` (same shape) is
    populated by :func:`backward` for tensors with ``requires_grad``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, values, requires_grad=False):
        self.data = _as_f32(values)
        _check_finite(self.data, "tensor creation")
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise GraphError(f"item() on tensor of size {self.data.size}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def parameter(values):
    """Trainable tensor."""
    return Tensor(values, requires_grad=True)


def constant(values):
    return Tensor(values, requires_grad=False)


def _make(out_data, parents, backward_fn, op_name):
    _check_finite(out_data, op_name)
    out = Tensor.__new__(Tensor)
    out.data = out_data
    out.grad = None
    out._parents = ()
    out._backward_fn = None
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    else:
        out.requires_grad = False
    return out


def _require_shape(cond, msg):
    if not cond:
        raise GraphError(msg)


# ---------------------------------------------------------------------------
# elementwise arithmetic

def add(a: Tensor, b: Tensor) -> Tensor:
    _require_shape(a.shape == b.shape, f"add shape mismatch {a.shape} vs {b.shape}")

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy)
        if b.requires_grad:
            b.accumulate_grad(gy)

    return _make(a.data + b.data, (a, b), bwd, "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_shape(a.shape == b.shape, f"sub shape mismatch {a.shape} vs {b.shape}")

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy)
        if b.requires_grad:
            b.accumulate_grad(-gy)

    return _make(a.data - b.data, (a, b), bwd, "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_shape(a.shape == b.shape, f"mul shape mismatch {a.shape} vs {b.shape}")

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy * b.data)
        if b.requires_grad:
            b.accumulate_grad(gy * a.data)

    return _make(a.data * b.data, (a, b), bwd, "mul")


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy * np.float32(c))

    return _make(a.data * np.float32(c), (a,), bwd, "scale")


def add_scalar(a: Tensor, c: float) -> Tensor:
    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy)

    return _make(a.data + np.float32(c), (a,), bwd, "add_scalar")


def neg(a: Tensor) -> Tensor:
    return scale(a, -1.0)


def square(a: Tensor) -> Tensor:
    return mul(a, a)


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise min; ties route the gradient to ``a``."""
    _require_shape(a.shape == b.shape, f"minimum shape mismatch {a.shape} vs {b.shape}")
    take_a = a.data <= b.data

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(np.where(take_a, gy, 0.0).astype(np.float32))
        if b.requires_grad:
            b.accumulate_grad(np.where(take_a, 0.0, gy).astype(np.float32))

    return _make(np.where(take_a, a.data, b.data), (a, b), bwd, "minimum")


# ---------------------------------------------------------------------------
# nonlinearities

def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(np.where(mask, gy, 0.0).astype(np.float32))

    return _make(np.where(mask, a.data, 0.0).astype(np.float32), (a,), bwd, "relu")


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy * (1.0 - t * t))

    return _make(t, (a,), bwd, "tanh")


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        e = np.exp(a.data)

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy * e)

    return _make(e, (a,), bwd, "exp")


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy / a.data)

    return _make(out, (a,), bwd, "log")


# ---------------------------------------------------------------------------
# linear algebra

def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require_shape(
        a.data.ndim == 2 and b.data.ndim == 2 and a.shape[1] == b.shape[0],
        f"matmul shape mismatch {a.shape} @ {b.shape}",
    )

    def bwd(gy):
        if a.requires_grad:
            a.accumulate_grad(gy @ b.data.T)
        if b.requires_grad:
            b.accumulate_grad(a.data.T @ gy)

    return _make(a.data @ b.data, (a, b), bwd, "matmul")


def add_rowvec(x: Tensor, v: Tensor) -> Tensor:
    """Bias add: (N, D) + (D,)."""
    _require_shape(
        x.data.ndim == 2 and v.data.ndim == 1 and x.shape[1] == v.shape[0],
        f"add_rowvec shape mismatch {x.shape} + {v.shape}",
    )

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(gy)
        if v.requires_grad:
            v.accumulate_grad(gy.sum(axis=0))

    return _make(x.data + v.data[None, :], (x, v), bwd, "add_rowvec")


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """(N, D_in) @ (D_in, D_out) + (D_out,)."""
    return add_rowvec(matmul(x, weights), bias)


def mul_const_rowvec(x: Tensor, v) -> Tensor:
    """Scale columns by a constant row vector (no gradient for v)."""
    v = _as_f32(v)
    _require_shape(
        x.data.ndim == 2 and v.ndim == 1 and x.shape[1] == v.shape[0],
        f"mul_const_rowvec shape mismatch {x.shape} * {v.shape}",
    )

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(gy * v[None, :])

    return _make(x.data * v[None, :], (x,), bwd, "mul_const_rowvec")


def add_const_rowvec(x: Tensor, v) -> Tensor:
    v = _as_f32(v)

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(gy)

    return _make(x.data + v[None, :], (x,), bwd, "add_const_rowvec")


def scale_by(s: Tensor, x: Tensor) -> Tensor:
    """Multiply by a single-element tensor (the one scalar broadcast we allow)."""
    _require_shape(s.data.size == 1, f"scale_by expects scalar tensor, got {s.shape}")
    sval = s.data.reshape(())

    def bwd(gy):
        if s.requires_grad:
            s.accumulate_grad(np.array((gy * x.data).sum(), dtype=np.float32).reshape(s.shape))
        if x.requires_grad:
            x.accumulate_grad(gy * sval)

    return _make(x.data * sval, (s, x), bwd, "scale_by")


# ---------------------------------------------------------------------------
# shape ops

def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(gy.reshape(x.shape))

    return _make(np.ascontiguousarray(x.data.reshape(shape)), (x,), bwd, "reshape")


def concat_cols(parts) -> Tensor:
    """Concatenate (N, D_i) tensors along columns."""
    parts = list(parts)
    _require_shape(all(p.data.ndim == 2 for p in parts), "concat_cols expects 2-D tensors")
    widths = [p.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def bwd(gy):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                p.accumulate_grad(np.ascontiguousarray(gy[:, lo:hi]))

    return _make(np.concatenate([p.data for p in parts], axis=1), tuple(parts), bwd, "concat_cols")


def detach(x: Tensor) -> Tensor:
    """Gradient stop: same values, no graph edge."""
    return Tensor(x.data, requires_grad=False)


# ---------------------------------------------------------------------------
# reductions

def sum_all(x: Tensor) -> Tensor:
    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(np.full_like(x.data, gy.reshape(())))

    return _make(np.array(x.data.sum(), dtype=np.float32), (x,), bwd, "sum_all")


def mean_all(x: Tensor) -> Tensor:
    inv = np.float32(1.0 / x.data.size)

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(np.full_like(x.data, gy.reshape(()) * inv))

    return _make(np.array(x.data.mean(dtype=np.float32), dtype=np.float32), (x,), bwd, "mean_all")


def sum_rows(x: Tensor) -> Tensor:
    """(N, D) -> (N,) row sums."""
    _require_shape(x.data.ndim == 2, f"sum_rows expects 2-D, got {x.shape}")

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(np.repeat(gy[:, None], x.shape[1], axis=1))

    return _make(x.data.sum(axis=1), (x,), bwd, "sum_rows")


# ---------------------------------------------------------------------------
# normalization

def layer_norm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization to zero mean / unit variance, then affine."""
    _require_shape(x.data.ndim == 2, f"layer_norm expects 2-D, got {x.shape}")
    d = x.shape[1]
    _require_shape(d >= 2, "layer_norm needs at least 2 features")
    mu = x.data.mean(axis=1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + np.float32(eps))
    xhat = xc * inv_std
    out = xhat * gain.data[None, :] + shift.data[None, :]

    def bwd(gy):
        if gain.requires_grad:
            gain.accumulate_grad((gy * xhat).sum(axis=0))
        if shift.requires_grad:
            shift.accumulate_grad(gy.sum(axis=0))
        if x.requires_grad:
            gxhat = gy * gain.data[None, :]
            # d/dx of (x - mu)/sqrt(var + eps) with both mu and var row stats
            gvar = (gxhat * xc).sum(axis=1, keepdims=True) * (-0.5) * inv_std ** 3
            gmu = -(gxhat * inv_std).sum(axis=1, keepdims=True) + gvar * (-2.0 / d) * xc.sum(
                axis=1, keepdims=True
            )
            gx = gxhat * inv_std + gvar * (2.0 / d) * xc + gmu / d
            x.accumulate_grad(gx.astype(np.float32))

    return _make(out.astype(np.float32), (x, gain, shift), bwd, "layer_norm")


# ---------------------------------------------------------------------------
# convolutions

def conv2d(x: Tensor, kernels: Tensor, stride: int) -> Tensor:
    """Valid cross-correlation, 3x3 kernels, stride 1 or 2."""
    _require_shape(x.data.ndim == 4 and kernels.data.ndim == 4, "conv2d expects 4-D tensors")
    n, c, h, w = x.shape
    f, ck, kh, kw = kernels.shape
    _require_shape(kh == 3 and kw == 3, f"conv2d expects 3x3 kernels, got {kh}x{kw}")
    _require_shape(ck == c, f"conv2d channel mismatch: input {c}, kernels {ck}")
    _require_shape(stride in (1, 2), f"conv2d stride must be 1 or 2, got {stride}")
    _require_shape(h >= 3 and w >= 3, f"conv2d input {h}x{w} smaller than kernel")

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(_kernels.conv2d_input_grad(gy, kernels.data, stride, h, w))
        if kernels.requires_grad:
            kernels.accumulate_grad(_kernels.conv2d_kernel_grad(x.data, gy, stride))

    return _make(_kernels.conv2d_forward(x.data, kernels.data, stride), (x, kernels), bwd, "conv2d")


def conv2d_transpose(x: Tensor, kernels: Tensor, stride: int, output_hw) -> Tensor:
    """Adjoint of conv2d: (N,F,Ho,Wo) with (F,C,3,3) kernels -> (N,C,H,W).

    output_hw pins the output size when stride 2 leaves it ambiguous;
    it must round-trip through the matching conv2d geometry.
    """
    _require_shape(x.data.ndim == 4 and kernels.data.ndim == 4, "conv2d_transpose expects 4-D tensors")
    n, f, ho, wo = x.shape
    fk, c, kh, kw = kernels.shape
    _require_shape(kh == 3 and kw == 3, "conv2d_transpose expects 3x3 kernels")
    _require_shape(fk == f, f"conv2d_transpose channel mismatch: input {f}, kernels {fk}")
    _require_shape(stride in (1, 2), f"conv2d_transpose stride must be 1 or 2, got {stride}")
    h, w = output_hw
    _require_shape(
        (h - 3) // stride + 1 == ho and (w - 3) // stride + 1 == wo,
        f"conv2d_transpose output {h}x{w} incompatible with input {ho}x{wo} at stride {stride}",
    )

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(_kernels.conv2d_forward(gy, kernels.data, stride))
        if kernels.requires_grad:
            kernels.accumulate_grad(_kernels.conv2d_kernel_grad(gy, x.data, stride))

    return _make(
        _kernels.conv2d_input_grad(x.data, kernels.data, stride, h, w),
        (x, kernels),
        bwd,
        "conv2d_transpose",
    )


def add_channel_bias(x: Tensor, bias: Tensor) -> Tensor:
    """(N, F, H, W) + per-channel (F,) bias."""
    _require_shape(
        x.data.ndim == 4 and bias.data.ndim == 1 and x.shape[1] == bias.shape[0],
        f"add_channel_bias shape mismatch {x.shape} + {bias.shape}",
    )

    def bwd(gy):
        if x.requires_grad:
            x.accumulate_grad(gy)
        if bias.requires_grad:
            bias.accumulate_grad(gy.sum(axis=(0, 2, 3)))

    return _make(x.data + bias.data[None, :, None, None], (x, bias), bwd, "add_channel_bias")


# ---------------------------------------------------------------------------
# policy densities

def gaussian_logprob(raw_action: Tensor, mean: Tensor, log_std: Tensor) -> Tensor:
    """Log density of a diagonal Gaussian at ``raw_action`` minus the
    tanh-squashing Jacobian correction. Returns one value per row."""
    _require_shape(
        raw_action.shape == mean.shape == log_std.shape and raw_action.data.ndim == 2,
        "gaussian_logprob expects matching (N, D) tensors",
    )
    d = raw_action.shape[1]
    diff = sub(raw_action, mean)
    z = mul(diff, exp(neg(log_std)))
    quad = scale(sum_rows(mul(z, z)), -0.5)
    gauss = add_scalar(sub(quad, sum_rows(log_std)), -0.5 * d * LOG_2PI)
    t = tanh(raw_action)
    correction = sum_rows(log(add_scalar(neg(mul(t, t)), 1.0 + 1e-6)))
    return sub(gauss, correction)


# ---------------------------------------------------------------------------
# backward pass

def backward(loss: Tensor):
    """Reverse-mode accumulation from a scalar loss into ``.grad`` of every
    reachable tensor with ``requires_grad``."""
    if loss.data.size != 1:
        raise GraphError(f"backward expects a scalar loss, got shape {loss.shape}")

    # iterative topological sort (DFS); graph construction is functional so
    # cycles indicate corruption, which the in-stack check surfaces
    topo = []
    visited = set()
    in_stack = set()
    stack = [(loss, iter(loss._parents))]
    visited.add(id(loss))
    in_stack.add(id(loss))
    while stack:
        node, it = stack[-1]
        advanced = False
        for parent in it:
            pid = id(parent)
            if pid in in_stack:
                raise GraphError("cycle detected in computation graph")
            if pid not in visited:
                visited.add(pid)
                in_stack.add(pid)
                stack.append((parent, iter(parent._parents)))
                advanced = True
                break
        if not advanced:
            stack.pop()
            in_stack.discard(id(node))
            topo.append(node)

    loss.accumulate_grad(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward_fn is not None and node.grad is not None:
            node._backward_fn(node.grad)
