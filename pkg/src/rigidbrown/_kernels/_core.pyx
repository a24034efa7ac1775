# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop of the overdamped Langevin integrator.

Advances one path over a chunk of Euler steps with pregenerated Gaussian
increments.  All pairs within the interaction range contribute forces; pair
enumeration is all-to-all, which is the right trade-off at desk-scale particle
counts where this kernel spends its time on millions of tiny steps.
"""

from libc.math cimport sqrt, isfinite

import numpy as np


def integrate_chunk(double[:, ::1] x, double[:, :, ::1] noise,
                    double drift_coef, double sqrt_dt,
                    double a, double w, double k, double range_b,
                    unsigned char[:, ::1] adjacency):
    """Run noise.shape[0] Euler steps in place; returns (status, bad_step, offgraph).

    status 0 means success; 1 means a non-finite or exploding coordinate first
    appeared at step index bad_step.  offgraph counts (step, pair) events where
    a non-neighboring pair came within the interaction range.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t steps = noise.shape[0]
    cdef double b2 = range_b * range_b
    cdef double inner = a - w
    cdef double inner2 = inner * inner if inner > 0.0 else 0.0
    cdef double force_scale = 8.0 * k / w
    cdef double blow_up = 1e9

    cdef double[:, ::1] force = np.zeros((n, d))
    cdef double[::1] dx = np.zeros(d)

    cdef Py_ssize_t s, i, j, c
    cdef double r2, r, sep, q, du, coef, fc, xi
    cdef long offgraph = 0
    cdef bint bad

    for s in range(steps):
        for i in range(n):
            for c in range(d):
                force[i, c] = 0.0

        for i in range(n):
            for j in range(i + 1, n):
                r2 = 0.0
                for c in range(d):
                    fc = x[i, c] - x[j, c]
                    dx[c] = fc
                    r2 += fc * fc
                if r2 >= b2:
                    continue
                if adjacency[i, j] == 0:
                    offgraph += 1
                if r2 <= inner2 or r2 == 0.0:
                    continue  # flat part of the well: zero force
                r = sqrt(r2)
                sep = (r - a) / w
                q = sep * sep - 1.0
                du = -force_scale * sep * q * q * q
                coef = -du / r
                for c in range(d):
                    fc = coef * dx[c]
                    force[i, c] += fc
                    force[j, c] -= fc

        bad = False
        for i in range(n):
            for c in range(d):
                xi = x[i, c] + drift_coef * force[i, c] + sqrt_dt * noise[s, i, c]
                x[i, c] = xi
                if not isfinite(xi) or xi > blow_up or xi < -blow_up:
                    bad = True
        if bad:
            return 1, s, offgraph

    return 0, -1, offgraph
