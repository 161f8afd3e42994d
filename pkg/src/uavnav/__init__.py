"""Desk-scale multi-UAV depth-vision simulator and collision-avoidance trainer."""

__version__ = "0.1.0"

from uavnav._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
