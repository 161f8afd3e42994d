"""Central finite-difference gradient checking for the autodiff layer.

Forward passes run in float32, so the probe step must stay well above the
rounding floor; eps around 1e-2 on order-one inputs puts the truncation
error near 1e-4 relative, comfortably below the 1e-3 gate.
"""

import numpy as np

from uavnav.autodiff import Tensor, backward


def numeric_grad(fn, x, eps=1e-2):
    """Central-difference gradient of scalar fn at x, elementwise."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = fn(x)
        flat[i] = orig - eps
        fm = fn(x)
        flat[i] = orig
        gf[i] = (fp - fm) / (2.0 * eps)
    return g


def relative_error(analytic, numeric):
    na = float(np.linalg.norm(analytic.astype(np.float64)))
    nn = float(np.linalg.norm(numeric))
    return float(np.linalg.norm(analytic.astype(np.float64) - numeric)) / max(na, nn, 1e-6)


def check_op(build_loss, inputs, eps=1e-2, tol=1e-3):
    """Compare backward() against finite differences for every input.

    build_loss takes a dict name -> Tensor and returns a scalar Tensor.
    inputs maps name -> float32 array; each gets requires_grad.
    Returns the worst relative error seen.
    """
    tensors = {k: Tensor(v.copy(), requires_grad=True) for k, v in inputs.items()}
    loss = build_loss(tensors)
    backward(loss)
    worst = 0.0
    for name, t in tensors.items():
        assert t.grad is not None, f"no gradient reached input {name!r}"

        def scalar(x, _name=name):
            fresh = {k: Tensor(v.data if k != _name else x.astype(np.float32))
                     for k, v in tensors.items()}
            return float(build_loss(fresh).data)

        num = numeric_grad(scalar, tensors[name].data.astype(np.float64), eps)
        err = relative_error(t.grad, num)
        assert err < tol, f"gradient mismatch for {name!r}: rel err {err:.3e}"
        worst = max(worst, err)
    return worst
