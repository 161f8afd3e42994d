"""Finite-difference checks for every differentiable op, plus graph rules.

CASES is the complete op registry; each entry samples inputs away from
non-smooth points so central differences are trustworthy. The registry is
shared with the acceptance suite, which sweeps it over many seeds.
"""

import numpy as np
import pytest

from gradcheck import check_op
from uavnav import autodiff as ad
from uavnav.autodiff import (
    GraphError,
    NonFiniteError,
    Tensor,
    backward,
    constant,
    no_grad,
    parameter,
)


def _away_from_zero(x, margin=0.1):
    return np.where(np.abs(x) < margin, x + np.sign(x + 0.5) * 2 * margin, x)


def _separated(a, b, margin=0.1):
    """Push b away from a wherever they nearly tie."""
    close = np.abs(a - b) < margin
    return np.where(close, b + 3 * margin, b)


def f32(rng, *shape):
    return rng.standard_normal(shape).astype(np.float32)


# name -> (make_inputs(rng) -> dict, build_loss(tensors) -> scalar Tensor)
CASES = {
    "add": (
        lambda rng: {"a": f32(rng, 3, 4), "b": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.mul(ad.add(t["a"], t["b"]), constant(np.arange(12, dtype=np.float32).reshape(3, 4)))),
    ),
    "sub": (
        lambda rng: {"a": f32(rng, 3, 4), "b": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.sub(t["a"], t["b"]))),
    ),
    "mul": (
        lambda rng: {"a": f32(rng, 3, 4), "b": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.mul(t["a"], t["b"])),
    ),
    "scale": (
        lambda rng: {"a": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.scale(t["a"], -1.7)),
    ),
    "add_scalar": (
        lambda rng: {"a": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.add_scalar(t["a"], 0.3))),
    ),
    "neg": (
        lambda rng: {"a": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.neg(t["a"]))),
    ),
    "square": (
        lambda rng: {"a": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(t["a"])),
    ),
    "minimum": (
        lambda rng: (lambda a: {"a": a, "b": _separated(a, f32(rng, 3, 4))})(f32(rng, 3, 4)),
        lambda t: ad.sum_all(ad.square(ad.minimum(t["a"], t["b"]))),
    ),
    "relu": (
        lambda rng: {"a": _away_from_zero(f32(rng, 3, 4)).astype(np.float32)},
        lambda t: ad.sum_all(ad.square(ad.relu(t["a"]))),
    ),
    "tanh": (
        lambda rng: {"a": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.tanh(t["a"]))),
    ),
    "exp": (
        lambda rng: {"a": (0.5 * f32(rng, 3, 4)).astype(np.float32)},
        lambda t: ad.sum_all(ad.exp(t["a"])),
    ),
    "log": (
        lambda rng: {"a": (1.5 + 0.5 * np.abs(f32(rng, 3, 4))).astype(np.float32)},
        lambda t: ad.sum_all(ad.square(ad.log(t["a"]))),
    ),
    "matmul": (
        lambda rng: {"a": f32(rng, 3, 4), "b": f32(rng, 4, 2)},
        lambda t: ad.sum_all(ad.square(ad.matmul(t["a"], t["b"]))),
    ),
    "add_rowvec": (
        lambda rng: {"x": f32(rng, 3, 4), "v": f32(rng, 4)},
        lambda t: ad.sum_all(ad.square(ad.add_rowvec(t["x"], t["v"]))),
    ),
    "dense": (
        lambda rng: {"x": f32(rng, 3, 4), "w": f32(rng, 4, 2), "b": f32(rng, 2)},
        lambda t: ad.sum_all(ad.square(ad.dense(t["x"], t["w"], t["b"]))),
    ),
    "mul_const_rowvec": (
        lambda rng: {"x": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.mul_const_rowvec(t["x"], [0.5, -1.0, 2.0, 0.25]))),
    ),
    "add_const_rowvec": (
        lambda rng: {"x": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.add_const_rowvec(t["x"], [0.5, -1.0, 2.0, 0.25]))),
    ),
    "scale_by": (
        lambda rng: {"s": f32(rng, 1), "x": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.scale_by(t["s"], t["x"]))),
    ),
    "reshape": (
        lambda rng: {"x": f32(rng, 2, 6)},
        lambda t: ad.sum_all(
            ad.mul(ad.reshape(t["x"], (3, 4)), constant(np.arange(12, dtype=np.float32).reshape(3, 4)))
        ),
    ),
    "concat_cols": (
        lambda rng: {"a": f32(rng, 3, 2), "b": f32(rng, 3, 3)},
        lambda t: ad.sum_all(ad.square(ad.concat_cols([t["a"], t["b"]]))),
    ),
    "sum_all": (
        lambda rng: {"x": f32(rng, 3, 4)},
        lambda t: ad.square(ad.sum_all(t["x"])),
    ),
    "mean_all": (
        lambda rng: {"x": f32(rng, 3, 4)},
        lambda t: ad.square(ad.mean_all(t["x"])),
    ),
    "sum_rows": (
        lambda rng: {"x": f32(rng, 3, 4)},
        lambda t: ad.sum_all(ad.square(ad.sum_rows(t["x"]))),
    ),
    "layer_norm": (
        lambda rng: {"x": f32(rng, 3, 8), "g": (1.0 + 0.2 * f32(rng, 8)).astype(np.float32), "s": f32(rng, 8)},
        lambda t: ad.sum_all(ad.square(ad.layer_norm(t["x"], t["g"], t["s"]))),
    ),
    "conv2d_s1": (
        lambda rng: {"x": f32(rng, 2, 2, 5, 5), "k": f32(rng, 3, 2, 3, 3)},
        lambda t: ad.sum_all(ad.square(ad.conv2d(t["x"], t["k"], 1))),
    ),
    "conv2d_s2": (
        lambda rng: {"x": f32(rng, 2, 2, 7, 7), "k": f32(rng, 3, 2, 3, 3)},
        lambda t: ad.sum_all(ad.square(ad.conv2d(t["x"], t["k"], 2))),
    ),
    "conv2d_transpose_s1": (
        lambda rng: {"x": f32(rng, 1, 3, 3, 3), "k": f32(rng, 3, 2, 3, 3)},
        lambda t: ad.sum_all(ad.square(ad.conv2d_transpose(t["x"], t["k"], 1, (5, 5)))),
    ),
    "conv2d_transpose_s2": (
        lambda rng: {"x": f32(rng, 1, 3, 3, 3), "k": f32(rng, 3, 2, 3, 3)},
        lambda t: ad.sum_all(ad.square(ad.conv2d_transpose(t["x"], t["k"], 2, (7, 7)))),
    ),
    "add_channel_bias": (
        lambda rng: {"x": f32(rng, 2, 3, 4, 4), "b": f32(rng, 3)},
        lambda t: ad.sum_all(ad.square(ad.add_channel_bias(t["x"], t["b"]))),
    ),
    "gaussian_logprob": (
        lambda rng: {
            "raw": f32(rng, 4, 3),
            "mean": f32(rng, 4, 3),
            "log_std": (0.5 * f32(rng, 4, 3) - 0.3).astype(np.float32),
        },
        lambda t: ad.sum_all(ad.gaussian_logprob(t["raw"], t["mean"], t["log_std"])),
    ),
}


def run_case(name, seed):
    make_inputs, build_loss = CASES[name]
    rng = np.random.default_rng(seed)
    return check_op(build_loss, make_inputs(rng))


class TestGradients:
    @pytest.mark.parametrize("name", sorted(CASES))
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_against_finite_differences(self, name, seed):
        run_case(name, seed)

    def test_chained_network_block(self):
        """conv -> relu -> flatten -> dense -> layer_norm -> tanh composite."""
        rng = np.random.default_rng(5)

        def build(t):
            h = ad.relu(ad.conv2d(t["x"], t["k"], 2))
            flat = ad.reshape(h, (h.shape[0], h.shape[1] * h.shape[2] * h.shape[3]))
            z = ad.dense(flat, t["w"], t["b"])
            z = ad.tanh(ad.layer_norm(z, t["g"], t["s"]))
            return ad.mean_all(ad.square(z))

        inputs = {
            "x": f32(rng, 2, 1, 9, 9),
            "k": (0.3 * f32(rng, 2, 1, 3, 3)).astype(np.float32),
            "w": (0.3 * f32(rng, 32, 6)).astype(np.float32),
            "b": f32(rng, 6),
            "g": (1.0 + 0.1 * f32(rng, 6)).astype(np.float32),
            "s": f32(rng, 6),
        }
        check_op(build, inputs)


class TestGraphMechanics:
    def test_reused_tensor_accumulates(self):
        x = parameter([2.0, 3.0])
        backward(ad.sum_all(ad.add(x, x)))
        assert np.allclose(x.grad, [2.0, 2.0])

    def test_detach_blocks_gradient(self):
        x = parameter([1.0, 2.0])
        y = ad.detach(ad.square(x))
        backward(ad.sum_all(ad.mul(y, y)))
        assert x.grad is None

    def test_constant_receives_no_gradient(self):
        x = parameter([[1.0, 2.0]])
        c = constant([[3.0, 4.0]])
        backward(ad.sum_all(ad.mul(x, c)))
        assert np.allclose(x.grad, [[3.0, 4.0]])
        assert c.grad is None

    def test_no_grad_builds_no_graph(self):
        x = parameter([1.0, 2.0])
        with no_grad():
            y = ad.square(x)
        assert not y.requires_grad
        assert y._parents == ()

    def test_backward_rejects_non_scalar(self):
        x = parameter([[1.0, 2.0]])
        with pytest.raises(GraphError):
            backward(ad.square(x))

    def test_minimum_ties_route_to_first(self):
        a = parameter([1.0, 5.0])
        b = parameter([1.0, 2.0])
        backward(ad.sum_all(ad.minimum(a, b)))
        assert np.allclose(a.grad, [1.0, 0.0])
        assert np.allclose(b.grad, [0.0, 1.0])

    def test_zero_grad_clears(self):
        x = parameter([1.0])
        backward(ad.sum_all(x))
        assert x.grad is not None
        x.zero_grad()
        assert x.grad is None

    def test_item_on_scalar_only(self):
        assert parameter([3.5]).item() == pytest.approx(3.5)
        with pytest.raises(GraphError):
            parameter([1.0, 2.0]).item()


class TestFiniteness:
    def test_nan_input_rejected_at_creation(self):
        with pytest.raises(NonFiniteError):
            Tensor([np.nan])

    def test_overflow_surfaces_at_the_op(self):
        x = constant([100.0])
        with pytest.raises(NonFiniteError, match="exp"):
            ad.exp(x)

    def test_log_of_negative_rejected(self):
        with pytest.raises(NonFiniteError, match="log"):
            ad.log(constant([-1.0]))

    def test_shape_mismatch_is_graph_error(self):
        with pytest.raises(GraphError):
            ad.add(constant([[1.0]]), constant([1.0, 2.0]))
        with pytest.raises(GraphError):
            ad.matmul(constant([[1.0, 2.0]]), constant([[1.0, 2.0]]))
