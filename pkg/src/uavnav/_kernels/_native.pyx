# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel implementations: direct loops over typed memoryviews.

Mirrors _numpy semantics; no cross-element accumulation order differs
within one backend, so results are deterministic run to run.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, cos, sin, sqrt

cnp.import_array()

BACKEND_NAME = "native"


def conv2d_forward(cnp.ndarray[cnp.float32_t, ndim=4] x,
                   cnp.ndarray[cnp.float32_t, ndim=4] k,
                   int stride):
    cdef int n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef int f = k.shape[0]
    cdef int ho = (h - 3) // stride + 1
    cdef int wo = (w - 3) // stride + 1
    out = np.zeros((n, f, ho, wo), dtype=np.float32)
    cdef cnp.float32_t[:, :, :, ::1] xv = np.ascontiguousarray(x)
    cdef cnp.float32_t[:, :, :, ::1] kv = np.ascontiguousarray(k)
    cdef cnp.float32_t[:, :, :, ::1] yv = out
    cdef int b, ff, cc, i, j, p, q
    cdef float acc
    cdef float w00, w01, w02, w10, w11, w12, w20, w21, w22
    cdef int i0, j0
    with nogil:
        for b in range(n):
            for ff in range(f):
                for cc in range(c):
                    w00 = kv[ff, cc, 0, 0]; w01 = kv[ff, cc, 0, 1]; w02 = kv[ff, cc, 0, 2]
                    w10 = kv[ff, cc, 1, 0]; w11 = kv[ff, cc, 1, 1]; w12 = kv[ff, cc, 1, 2]
                    w20 = kv[ff, cc, 2, 0]; w21 = kv[ff, cc, 2, 1]; w22 = kv[ff, cc, 2, 2]
                    for i in range(ho):
                        i0 = i * stride
                        for j in range(wo):
                            j0 = j * stride
                            acc = (w00 * xv[b, cc, i0, j0] + w01 * xv[b, cc, i0, j0 + 1]
                                   + w02 * xv[b, cc, i0, j0 + 2]
                                   + w10 * xv[b, cc, i0 + 1, j0] + w11 * xv[b, cc, i0 + 1, j0 + 1]
                                   + w12 * xv[b, cc, i0 + 1, j0 + 2]
                                   + w20 * xv[b, cc, i0 + 2, j0] + w21 * xv[b, cc, i0 + 2, j0 + 1]
                                   + w22 * xv[b, cc, i0 + 2, j0 + 2])
                            yv[b, ff, i, j] += acc
    return out


def conv2d_input_grad(cnp.ndarray[cnp.float32_t, ndim=4] gy,
                      cnp.ndarray[cnp.float32_t, ndim=4] k,
                      int stride, int h, int w):
    cdef int n = gy.shape[0], f = gy.shape[1], ho = gy.shape[2], wo = gy.shape[3]
    cdef int c = k.shape[1]
    gx = np.zeros((n, c, h, w), dtype=np.float32)
    cdef cnp.float32_t[:, :, :, ::1] gv = np.ascontiguousarray(gy)
    cdef cnp.float32_t[:, :, :, ::1] kv = np.ascontiguousarray(k)
    cdef cnp.float32_t[:, :, :, ::1] xv = gx
    cdef int b, ff, cc, i, j, p, q
    cdef float g
    with nogil:
        for b in range(n):
            for ff in range(f):
                for cc in range(c):
                    for i in range(ho):
                        for j in range(wo):
                            g = gv[b, ff, i, j]
                            for p in range(3):
                                for q in range(3):
                                    xv[b, cc, i * stride + p, j * stride + q] += g * kv[ff, cc, p, q]
    return gx


def conv2d_kernel_grad(cnp.ndarray[cnp.float32_t, ndim=4] x,
                       cnp.ndarray[cnp.float32_t, ndim=4] gy,
                       int stride):
    cdef int n = x.shape[0], c = x.shape[1]
    cdef int f = gy.shape[1], ho = gy.shape[2], wo = gy.shape[3]
    gk = np.zeros((f, c, 3, 3), dtype=np.float32)
    cdef cnp.float32_t[:, :, :, ::1] xv = np.ascontiguousarray(x)
    cdef cnp.float32_t[:, :, :, ::1] gv = np.ascontiguousarray(gy)
    cdef cnp.float32_t[:, :, :, ::1] kv = gk
    cdef int b, ff, cc, i, j, p, q
    cdef float g
    with nogil:
        for b in range(n):
            for ff in range(f):
                for cc in range(c):
                    for i in range(ho):
                        for j in range(wo):
                            g = gv[b, ff, i, j]
                            for p in range(3):
                                for q in range(3):
                                    kv[ff, cc, p, q] += g * xv[b, cc, i * stride + p, j * stride + q]
    return gk


def raycast_depth(cnp.ndarray[cnp.float64_t, ndim=1] origin,
                  double yaw,
                  cnp.ndarray[cnp.float64_t, ndim=3] dirs_body,
                  cnp.ndarray[cnp.float64_t, ndim=2] centers,
                  double radius, double max_depth):
    cdef int h = dirs_body.shape[0], w = dirs_body.shape[1]
    cdef int m = centers.shape[0]
    out = np.empty((h, w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] ov = out
    cdef cnp.float64_t[:, :, ::1] dv = np.ascontiguousarray(dirs_body)
    cdef cnp.float64_t[:, ::1] cv = np.ascontiguousarray(centers)
    cdef double cy = cos(yaw), sy = sin(yaw)
    cdef double ox = origin[0], oy = origin[1], oz = origin[2]
    cdef double r2 = radius * radius
    cdef int i, j, s
    cdef double dx, dy, dz, ocx, ocy, ocz, b, c0, disc, root, t, t_best, tn, tf
    with nogil:
        for i in range(h):
            for j in range(w):
                dx = dv[i, j, 0] * cy - dv[i, j, 1] * sy
                dy = dv[i, j, 0] * sy + dv[i, j, 1] * cy
                dz = dv[i, j, 2]
                t_best = INFINITY
                for s in range(m):
                    ocx = ox - cv[s, 0]; ocy = oy - cv[s, 1]; ocz = oz - cv[s, 2]
                    b = 2.0 * (dx * ocx + dy * ocy + dz * ocz)
                    c0 = ocx * ocx + ocy * ocy + ocz * ocz - r2
                    disc = b * b - 4.0 * c0
                    if disc >= 0.0:
                        root = sqrt(disc)
                        tn = 0.5 * (-b - root)
                        tf = 0.5 * (-b + root)
                        if tn > 0.0:
                            t = tn
                        elif tf > 0.0:
                            t = tf
                        else:
                            t = INFINITY
                        if t < t_best:
                            t_best = t
                if dz != 0.0:
                    t = -oz / dz
                    if t > 0.0 and t < t_best:
                        t_best = t
                if t_best > max_depth:
                    t_best = max_depth
                ov[i, j] = t_best
    return out
