"""Skew-symmetric matrices and the exponential/logarithm on rotation groups.

Closed forms are used for d = 2 (planar angle) and d = 3 (Rodrigues); higher
dimensions fall back to scipy's dense matrix functions.
"""

import numpy as np
import scipy.linalg

from .errors import UndersampledPathError


def skew_part(m: np.ndarray) -> np.ndarray:
    """Antisymmetric part (m - m^T) / 2."""
    return 0.5 * (m - m.T)


def skew_pairs(d: int) -> list:
    """Index pairs (alpha < beta) labelling the independent skew components."""
    return [(a, b) for a in range(d) for b in range(a + 1, d)]


def skew_basis(d: int) -> np.ndarray:
    """Basis matrices B_(a,b) with +1 at (a, b) and -1 at (b, a), a < b."""
    pairs = skew_pairs(d)
    basis = np.zeros((len(pairs), d, d))
    for idx, (a, b) in enumerate(pairs):
        basis[idx, a, b] = 1.0
        basis[idx, b, a] = -1.0
    return basis


def skew_to_vector(x: np.ndarray) -> np.ndarray:
    """Upper-triangle components of a skew matrix, ordered like skew_pairs."""
    d = x.shape[0]
    return np.array([x[a, b] for a, b in skew_pairs(d)])


def vector_to_skew(v: np.ndarray, d: int) -> np.ndarray:
    x = np.zeros((d, d))
    for val, (a, b) in zip(v, skew_pairs(d)):
        x[a, b] = val
        x[b, a] = -val
    return x


def so_exp(x: np.ndarray) -> np.ndarray:
    """Matrix exponential of a skew-symmetric matrix (a rotation)."""
    d = x.shape[0]
    if d == 1:
        return np.ones((1, 1))
    if d == 2:
        phi = x[1, 0]
        c, s = np.cos(phi), np.sin(phi)
        return np.array([[c, -s], [s, c]])
    if d == 3:
        v = np.array([x[2, 1], x[0, 2], x[1, 0]])
        angle = np.linalg.norm(v)
        if angle < 1e-12:
            return np.eye(3) + x + 0.5 * (x @ x)
        return (np.eye(3) + np.sin(angle) / angle * x
                + (1.0 - np.cos(angle)) / angle**2 * (x @ x))
    return scipy.linalg.expm(x)


def so_exp_batch(xs: np.ndarray) -> np.ndarray:
    """so_exp over a stack of skew matrices, shape (..., d, d)."""
    xs = np.asarray(xs, dtype=float)
    d = xs.shape[-1]
    if d == 2:
        phi = xs[..., 1, 0]
        c, s = np.cos(phi), np.sin(phi)
        out = np.empty_like(xs)
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
        return out
    if d == 3:
        v = np.stack([xs[..., 2, 1], xs[..., 0, 2], xs[..., 1, 0]], axis=-1)
        angle = np.linalg.norm(v, axis=-1)
        small = angle < 1e-12
        safe = np.where(small, 1.0, angle)
        sin_c = np.where(small, 1.0, np.sin(safe) / safe)
        cos_c = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
        x2 = xs @ xs
        return (np.eye(3) + sin_c[..., None, None] * xs
                + cos_c[..., None, None] * x2)
    flat = xs.reshape(-1, d, d)
    return np.stack([so_exp(x) for x in flat]).reshape(xs.shape)


def so_log(r: np.ndarray, max_defect: float = 0.5) -> np.ndarray:
    """Principal logarithm of a rotation matrix, returned as a skew matrix.

    Raises UndersampledPathError when ||r - I|| exceeds max_defect, the guard
    used when extracting increments from sampled rotation paths.
    """
    d = r.shape[0]
    defect = np.linalg.norm(r - np.eye(d))
    if defect > max_defect:
        raise UndersampledPathError(
            f"rotation increment too large for a principal logarithm "
            f"(||r - I|| = {defect:.3g} > {max_defect})")
    if d == 1:
        return np.zeros((1, 1))
    if d == 2:
        phi = np.arctan2(r[1, 0], r[0, 0])
        return np.array([[0.0, -phi], [phi, 0.0]])
    if d == 3:
        cos_angle = np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)
        angle = np.arccos(cos_angle)
        x = skew_part(r)
        if angle < 1e-7:
            return x  # log r = skew(r) + O(angle^3)
        return angle / np.sin(angle) * x
    return skew_part(scipy.linalg.logm(r).real)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random element of SO(d) via QR with sign fixing."""
    m = rng.standard_normal((d, d))
    q, rr = np.linalg.qr(m)
    q = q * np.sign(np.diag(rr))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def is_rotation(r: np.ndarray, tol: float = 1e-12) -> bool:
    d = r.shape[0]
    return (np.linalg.norm(r.T @ r - np.eye(d)) <= tol * d
            and abs(np.linalg.det(r) - 1.0) <= tol * d)
