"""Pure NumPy twin of the compiled integrator kernel.

Same contract as ``_core.integrate_chunk``; used when the extension is not
built (or when forced via RIGIDBROWN_BACKEND=python).  Vectorized over pairs,
so it is adequate for moderate step counts but roughly two orders of magnitude
slower than the compiled loop on small systems.
"""

import numpy as np


def integrate_chunk(x, noise, drift_coef, sqrt_dt, a, w, k, range_b, adjacency):
    """Run noise.shape[0] Euler steps in place; returns (status, bad_step, offgraph)."""
    n, d = x.shape
    b2 = range_b * range_b
    inner = a - w
    inner2 = inner * inner if inner > 0.0 else 0.0
    force_scale = 8.0 * k / w
    ii, jj = np.triu_indices(n, k=1)
    nonedge = ~adjacency[ii, jj].astype(bool)
    offgraph = 0

    for s in range(noise.shape[0]):
        dx = x[ii] - x[jj]
        r2 = np.einsum("pc,pc->p", dx, dx)
        in_range = r2 < b2
        offgraph += int(np.count_nonzero(in_range & nonedge))
        active = in_range & (r2 > inner2)
        force = np.zeros_like(x)
        if np.any(active):
            r = np.sqrt(r2[active])
            sep = (r - a) / w
            q = sep * sep - 1.0
            du = -force_scale * sep * q**3
            contrib = (-du / r)[:, None] * dx[active]
            np.add.at(force, ii[active], contrib)
            np.subtract.at(force, jj[active], contrib)
        x += drift_coef * force + sqrt_dt * noise[s]
        if not np.all(np.isfinite(x)) or np.abs(x).max() > 1e9:
            return 1, s, offgraph

    return 0, -1, offgraph
