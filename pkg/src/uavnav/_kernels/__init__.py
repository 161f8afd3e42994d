"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback
is picked up transparently otherwise. ``UAVNAV_BACKEND=numpy|native``
forces a choice (forcing ``native`` raises if the extension is missing).
"""

import os

_requested = os.environ.get("UAVNAV_BACKEND", "").strip().lower()

if _requested not in ("", "native", "numpy"):
    raise RuntimeError(f"unknown UAVNAV_BACKEND value: {_requested!r}")

if _requested == "numpy":
    from uavnav._kernels import _numpy as _impl
else:
    try:
        from uavnav._kernels import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "native":
            raise
        from uavnav._kernels import _numpy as _impl  # type: ignore[no-redef]

BACKEND = _impl.BACKEND_NAME
conv2d_forward = _impl.conv2d_forward
conv2d_input_grad = _impl.conv2d_input_grad
conv2d_kernel_grad = _impl.conv2d_kernel_grad
raycast_depth = _impl.raycast_depth
