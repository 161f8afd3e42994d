"""Pure-numpy kernel implementations.

Convolutions are expressed as im2col + sgemm so BLAS does the heavy
lifting; the raycaster is a broadcast quadratic solve over all pixels.
Semantics match ``_native`` exactly up to float32 summation order.
"""

import numpy as np

BACKEND_NAME = "numpy"


def _windows(x, stride):
    # (N, C, Ho, Wo, 3, 3) view, no copy
    w = np.lib.stride_tricks.sliding_window_view(x, (3, 3), axis=(2, 3))
    return w[:, :, ::stride, ::stride]


def conv2d_forward(x, k, stride):
    """Valid cross-correlation. x: (N,C,H,W), k: (F,C,3,3) -> (N,F,Ho,Wo)."""
    n = x.shape[0]
    f = k.shape[0]
    win = _windows(x, stride)
    ho, wo = win.shape[2], win.shape[3]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, -1)
    out = cols @ k.reshape(f, -1).T
    return np.ascontiguousarray(out.reshape(n, ho, wo, f).transpose(0, 3, 1, 2))


def conv2d_input_grad(gy, k, stride, h, w):
    """Adjoint of conv2d_forward w.r.t. its input (also the transposed-conv
    forward map). gy: (N,F,Ho,Wo), k: (F,C,3,3) -> (N,C,h,w)."""
    n, f, ho, wo = gy.shape
    c = k.shape[1]
    gx = np.zeros((n, c, h, w), dtype=np.float32)
    gyr = gy.transpose(0, 2, 3, 1).reshape(-1, f)
    for p in range(3):
        for q in range(3):
            contrib = (gyr @ k[:, :, p, q]).reshape(n, ho, wo, c).transpose(0, 3, 1, 2)
            gx[:, :, p:p + stride * ho:stride, q:q + stride * wo:stride] += contrib
    return gx


def conv2d_kernel_grad(x, gy, stride):
    """Adjoint of conv2d_forward w.r.t. the kernels. -> (F,C,3,3)."""
    n, f, ho, wo = gy.shape
    win = _windows(x, stride)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, -1)
    gyr = gy.transpose(1, 0, 2, 3).reshape(f, -1)
    return (gyr @ cols).reshape(f, x.shape[1], 3, 3)


def raycast_depth(origin, yaw, dirs_body, centers, radius, max_depth):
    """Depth frame by nearest ray hit against spheres and the z=0 plane.

    origin: (3,) float64, dirs_body: (H,W,3) unit rays in the body frame,
    centers: (M,3) sphere centers. Returns (H,W) float64 Euclidean ray
    lengths clamped to max_depth.
    """
    c, s = np.cos(yaw), np.sin(yaw)
    dx, dy, dz = dirs_body[..., 0], dirs_body[..., 1], dirs_body[..., 2]
    d = np.stack([dx * c - dy * s, dx * s + dy * c, dz], axis=-1)

    t_best = np.full(dirs_body.shape[:2], np.inf)
    for m in range(centers.shape[0]):
        oc = origin - centers[m]
        b = 2.0 * (d @ oc)
        c0 = oc @ oc - radius * radius
        disc = b * b - 4.0 * c0
        with np.errstate(invalid="ignore"):
            root = np.sqrt(np.maximum(disc, 0.0))
            t_near = 0.5 * (-b - root)
            t_far = 0.5 * (-b + root)
            t = np.where(t_near > 0.0, t_near, np.where(t_far > 0.0, t_far, np.inf))
            t = np.where(disc >= 0.0, t, np.inf)
        t_best = np.minimum(t_best, t)

    # ground plane z = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_plane = -origin[2] / d[..., 2]
    t_plane = np.where(t_plane > 0.0, t_plane, np.inf)
    t_best = np.minimum(t_best, t_plane)

    return np.minimum(t_best, max_depth)
