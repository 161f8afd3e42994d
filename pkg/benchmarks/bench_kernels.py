"""Timing comparison of the compiled and numpy kernel backends.

Runs each hot kernel on training-sized inputs and reports the median
wall time per call for both implementations, plus the speedup. The
numpy backend is always available; the compiled one is skipped with a
note if the extension is not importable.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import statistics
import time

import numpy as np

from uavnav._kernels import _numpy
from uavnav.camera import CameraModel

try:
    from uavnav._kernels import _native
except ImportError:
    _native = None


def time_call(fn, repeats):
    """Median seconds per call over `repeats` timed runs (one warmup)."""
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def make_cases(rng):
    """(name, kwargs-free closures per backend) for each hot kernel."""
    # conv shapes as used by the 32x32 encoder under a batch of 128
    x = rng.random((128, 3, 32, 32), dtype=np.float32)
    k = rng.standard_normal((32, 3, 3, 3)).astype(np.float32)
    gy = rng.standard_normal((128, 32, 15, 15)).astype(np.float32)

    cam = CameraModel(width=32, height=32)
    dirs = cam.rays_body
    origin = np.array([0.0, 0.0, 5.0])
    centers = rng.uniform([-10, -10, 1], [10, 10, 9], (10, 3))

    def per_backend(mod):
        return {
            "conv2d_forward   128x3x32x32": lambda: mod.conv2d_forward(x, k, 2),
            "conv2d_input_grad  same size": lambda: mod.conv2d_input_grad(gy, k, 2, 32, 32),
            "conv2d_kernel_grad same size": lambda: mod.conv2d_kernel_grad(x, gy, 2),
            "raycast_depth 32x32, 10 hits": lambda: mod.raycast_depth(
                origin, 0.3, dirs, centers, 0.5, 20.0
            ),
        }

    return per_backend


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20,
                        help="timed runs per kernel (default 20)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    per_backend = make_cases(rng)
    numpy_cases = per_backend(_numpy)
    native_cases = per_backend(_native) if _native is not None else None

    width = max(len(name) for name in numpy_cases)
    header = f"{'kernel':<{width}}  {'numpy':>10}  {'native':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, numpy_fn in numpy_cases.items():
        t_numpy = time_call(numpy_fn, args.repeats)
        if native_cases is None:
            print(f"{name:<{width}}  {t_numpy*1e3:>8.2f}ms  {'absent':>10}  {'':>8}")
            continue
        t_native = time_call(native_cases[name], args.repeats)
        print(
            f"{name:<{width}}  {t_numpy*1e3:>8.2f}ms  {t_native*1e3:>8.2f}ms"
            f"  {t_numpy / t_native:>7.1f}x"
        )
    if native_cases is None:
        print("\ncompiled extension not importable; numpy timings only")


if __name__ == "__main__":
    main()
