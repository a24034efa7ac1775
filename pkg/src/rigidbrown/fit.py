"""Best-fitting isometry of the reference crystal and its derivative calculus.

Given a configuration x near the isometry orbit of a centered crystal z, the
decomposition x = (rotation z + translation) + disp is computed by the Kabsch
construction: the translation is the center of mass, the rotation maximizes
the cross-moment trace over SO(d) (singular value decomposition with a
determinant sign correction), and the residual displacement field is then
orthogonal to every rigid motion at the fitted reference.
"""

from dataclasses import dataclass

import numpy as np

from .crystal import Crystal
from .errors import DegenerateFitError, SingularOperatorError
from .rotations import skew_basis, skew_part, skew_pairs, skew_to_vector, vector_to_skew


@dataclass
class Decomposition:
    """Isometry + orthogonal fluctuation split of a configuration."""

    rotation: np.ndarray       # (d, d) in SO(d)
    translation: np.ndarray    # (d,)
    fitted: np.ndarray         # (N, d) = z @ rotation^T + translation
    disp: np.ndarray           # (N, d) = x - fitted
    disp_inf: float            # max_i |disp_i|
    disp_edge_inf: float       # max over edges |disp_i - disp_j|
    exceeded_cap: bool | None = None


def cross_moment(x: np.ndarray, c: Crystal) -> np.ndarray:
    """Matrix sum_i z_i (x_i)^T; symmetric at x = z for a centered crystal."""
    return c.positions.T @ np.asarray(x, dtype=float)


def fit_isometry(x: np.ndarray, c: Crystal, sup_cap: float | None = None) -> Decomposition:
    """Closest isometric copy of the crystal plus orthogonal fluctuation.

    Raises DegenerateFitError when the two smallest singular values of the
    cross-moment both vanish, which makes the optimal rotation ambiguous;
    this cannot happen for small fluctuations around a rigid crystal.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != c.positions.shape:
        raise ValueError("configuration shape does not match the crystal")
    d = c.dim
    translation = x.mean(axis=0)

    if np.all(c.positions == 0.0):
        # single centered particle: the rotation is irrelevant, pick identity
        rotation = np.eye(d)
    else:
        q = cross_moment(x - translation, c)
        u, sing, vt = np.linalg.svd(q)
        scale = max(sing[0], np.abs(c.positions).max() ** 2)
        if d >= 2 and sing[d - 2] <= 1e-12 * scale:
            raise DegenerateFitError(
                "cross-moment is rank-deficient with ambiguous rotation sign "
                f"(singular values {sing})")
        signs = np.ones(d)
        if np.linalg.det(u) * np.linalg.det(vt) < 0:
            signs[-1] = -1.0
        rotation = (vt.T * signs) @ u.T

    fitted = c.positions @ rotation.T + translation
    disp = x - fitted
    disp_inf = float(np.linalg.norm(disp, axis=1).max())
    if len(c.edges):
        edge_diff = disp[c.edges[:, 0]] - disp[c.edges[:, 1]]
        disp_edge_inf = float(np.linalg.norm(edge_diff, axis=1).max())
    else:
        disp_edge_inf = 0.0
    exceeded = None if sup_cap is None else bool(disp_inf > sup_cap)
    return Decomposition(rotation=rotation, translation=translation, fitted=fitted,
                         disp=disp, disp_inf=disp_inf, disp_edge_inf=disp_edge_inf,
                         exceeded_cap=exceeded)


def tube_membership(dec: Decomposition, cap: float, kind: str = "edge_sup") -> bool:
    """Whether the fluctuation stays inside the tube of the given width.

    kind "sup" tests max_i |disp_i| <= cap; kind "edge_sup" tests the maximal
    difference across neighboring pairs instead.
    """
    if kind == "sup":
        return dec.disp_inf <= cap
    if kind == "edge_sup":
        return dec.disp_edge_inf <= cap
    raise ValueError(f"unknown tube kind {kind!r}")


def skew_product_operator(m: np.ndarray) -> np.ndarray:
    """Matrix of X -> skew_part(m @ X) acting on skew matrices."""
    d = m.shape[0]
    basis = skew_basis(d)
    cols = [skew_to_vector(skew_part(m @ bmat)) for bmat in basis]
    return np.array(cols).T


def solve_skew_product(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve skew_part(m @ X) = rhs for a skew-symmetric X.

    `rhs` must be skew-symmetric.  When m is diagonal with entries q_a the
    solution components are X_ab = 2 rhs_ab / (q_a + q_b).  Raises
    SingularOperatorError with a condition estimate when the operator is not
    invertible.
    """
    d = m.shape[0]
    op = skew_product_operator(m)
    cond = np.linalg.cond(op)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularOperatorError(
            f"skew-product operator is singular (condition {cond:.3g})", condition=cond)
    sol = np.linalg.solve(op, skew_to_vector(rhs))
    return vector_to_skew(sol, d)


def rotation_derivative(x: np.ndarray, c: Crystal, i: int, gamma: int) -> np.ndarray:
    """Derivative of the fitted rotation with respect to coordinate gamma of
    particle i, a matrix in the tangent space rotation @ so(d)."""
    dec = fit_isometry(x, c)
    theta = dec.rotation
    m = cross_moment(np.asarray(x, dtype=float) - dec.translation, c) @ theta
    rhs = skew_part(np.outer(theta[gamma, :], c.positions[i]))
    return theta @ solve_skew_product(m, rhs)


def rotation_gradient(x: np.ndarray, c: Crystal) -> np.ndarray:
    """All rotation derivatives at once, shape (N, d, d, d) indexed [i, gamma].

    Shares one operator factorization across particles and coordinates, unlike
    repeated rotation_derivative calls.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    dec = fit_isometry(x, c)
    theta = dec.rotation
    m = cross_moment(x - dec.translation, c) @ theta
    op = skew_product_operator(m)
    cond = np.linalg.cond(op)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularOperatorError(
            f"skew-product operator is singular (condition {cond:.3g})", condition=cond)
    op_inv = np.linalg.inv(op)
    basis = skew_basis(d)

    grad = np.empty((n, d, d, d))
    for gamma in range(d):
        for i in range(n):
            rhs = skew_part(np.outer(theta[gamma, :], c.positions[i]))
            sol = op_inv @ skew_to_vector(rhs)
            grad[i, gamma] = theta @ np.tensordot(sol, basis, axes=1)
    return grad


def gradient_orthogonality(x: np.ndarray, c: Crystal, spec) -> float:
    """Normalized inner product between the rotation gradient and the energy
    gradient, maximized over rotation components; zero at critical points.

    The fitted rotation depends on the configuration only through its
    projection to the isometry orbit, along which the energy is constant, so
    this residual vanishes up to numerical error at every tube point.
    """
    from .dynamics import total_force

    x = np.asarray(x, dtype=float)
    grad_h = -total_force(x, spec)
    norm_h = np.linalg.norm(grad_h)
    if norm_h == 0.0:
        return 0.0
    grad_theta = rotation_gradient(x, c)

    worst = 0.0
    for a, b in skew_pairs(c.dim):
        comp = grad_theta[:, :, a, b]
        norm_t = np.linalg.norm(comp)
        if norm_t == 0.0:
            continue
        inner = float(np.sum(comp * grad_h))
        worst = max(worst, abs(inner) / (norm_t * norm_h))
    return worst
