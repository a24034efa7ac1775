"""Hessian quadratic form at a crystal and infinitesimal-rigidity classification.

The energy Hessian at an equal-spacing configuration reduces to a sum over
neighboring pairs of rank-one blocks along the bond directions.  A crystal is
infinitesimally rigid when the kernel of that form consists exactly of the
rigid motions (global translations and rotations).  Two spectral constants are
reported: the smallest positive eigenvalue (`spectral_gap`) and the minimum of
the form against the squared edge differences (`edge_gap`).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .crystal import Crystal
from .errors import NotAnIsometryError
from .rotations import skew_basis

ZERO_TOL_FACTOR = 1e-8  # eigenvalues below this multiple of the curvature count as zero


def assemble_hessian(c: Crystal, curvature: float) -> np.ndarray:
    """Dense (dN, dN) energy Hessian at the crystal.

    Every edge (i, j) contributes (curvature / a^2) u u^T with u = z_i - z_j
    to the (i, i) and (j, j) blocks and its negative to the off-diagonal
    blocks.
    """
    n, d = c.positions.shape
    scale = curvature / c.spacing**2
    a_mat = np.zeros((n * d, n * d))
    for i, j in c.edges:
        u = c.positions[i] - c.positions[j]
        block = scale * np.outer(u, u)
        si, sj = slice(i * d, i * d + d), slice(j * d, j * d + d)
        a_mat[si, si] += block
        a_mat[sj, sj] += block
        a_mat[si, sj] -= block
        a_mat[sj, si] -= block
    return a_mat


def energy_form(c: Crystal, curvature: float, disp: np.ndarray) -> float:
    """Quadratic form of the Hessian: (curvature/a^2) sum_edges (u . (h_i - h_j))^2."""
    disp = np.asarray(disp, dtype=float).reshape(c.positions.shape)
    u = c.positions[c.edges[:, 0]] - c.positions[c.edges[:, 1]]
    dh = disp[c.edges[:, 0]] - disp[c.edges[:, 1]]
    proj = np.sum(u * dh, axis=1)
    return float(curvature / c.spacing**2 * np.sum(proj**2))


def force_form(c: Crystal, curvature: float, disp: np.ndarray) -> float:
    """Squared norm of the Hessian image: the harmonic squared-force functional.

    Equals (curvature^2/a^4) sum_i | sum_{j ~ i} (u_ij . (h_i - h_j)) u_ij |^2,
    and also one quarter of the squared gradient of energy_form.
    """
    disp = np.asarray(disp, dtype=float).reshape(c.positions.shape)
    n, d = c.positions.shape
    acc = np.zeros((n, d))
    for i, j in c.edges:
        u = c.positions[i] - c.positions[j]
        contrib = np.dot(u, disp[i] - disp[j]) * u
        acc[i] += contrib
        acc[j] -= contrib
    return float((curvature / c.spacing**2) ** 2 * np.sum(acc**2))


def edge_difference_form(c: Crystal) -> np.ndarray:
    """(dN, dN) matrix of the form sum_edges |h_i - h_j|^2 (graph Laplacian blocks)."""
    n, d = c.positions.shape
    lap = np.zeros((n, n))
    for i, j in c.edges:
        lap[i, i] += 1.0
        lap[j, j] += 1.0
        lap[i, j] -= 1.0
        lap[j, i] -= 1.0
    return np.kron(lap, np.eye(d))


def trivial_motion_basis(c: Crystal) -> np.ndarray:
    """Orthonormal basis of the rigid-motion fields, shape (m, N, d).

    Contains d translation fields and up to d(d-1)/2 rotation fields X z; for
    configurations whose affine hull is degenerate some rotation fields vanish
    and the basis shrinks (with a warning).
    """
    if not c.centered:
        raise ValueError("trivial motions are defined for centered crystals")
    n, d = c.positions.shape
    fields = []
    for alpha in range(d):
        t = np.zeros((n, d))
        t[:, alpha] = 1.0
        fields.append(t.ravel())
    for x in skew_basis(d):
        fields.append((c.positions @ x.T).ravel())
    stack = np.array(fields)

    # orthonormalize, dropping dependent directions (degenerate hulls)
    q, r = np.linalg.qr(stack.T)
    keep = np.abs(np.diag(r)) > 1e-10 * max(1.0, np.abs(np.diag(r)).max())
    expected = d + d * (d - 1) // 2
    if keep.sum() < expected:
        warnings.warn(
            f"rigid-motion space has dimension {int(keep.sum())} < {expected}: "
            "the affine hull of the configuration is degenerate")
    basis = q[:, keep].T
    return basis.reshape(-1, n, d)


@dataclass
class RigidityReport:
    """Spectral summary of the Hessian form at a crystal."""

    hessian: np.ndarray
    eigenvalues: np.ndarray
    trivial_dim: int          # expected kernel dimension d(d+1)/2
    trivial_rank: int         # actual dimension of the rigid-motion space
    zero_count: int
    edge_gap: float           # min of the form against sum |h_i - h_j|^2
    spectral_gap: float       # smallest positive eigenvalue
    rigid: bool
    zero_tol: float
    extras: dict = field(default_factory=dict)

    def summary(self, max_eigenvalues: int = 50) -> dict:
        ev = self.eigenvalues
        return {
            "n_dof": int(len(ev)),
            "eigenvalues_head": [float(v) for v in ev[:max_eigenvalues]],
            "min_eigenvalue": float(ev[0]),
            "max_eigenvalue": float(ev[-1]),
            "trivial_dim": self.trivial_dim,
            "trivial_rank": self.trivial_rank,
            "zero_count": self.zero_count,
            "edge_gap": float(self.edge_gap),
            "spectral_gap": float(self.spectral_gap),
            "rigid": bool(self.rigid),
            "zero_tol": float(self.zero_tol),
        }


def orthogonal_complement_basis(c: Crystal) -> np.ndarray:
    """(dN, m) orthonormal basis of the complement of the rigid-motion space."""
    basis = trivial_motion_basis(c)
    flat = basis.reshape(len(basis), -1)
    return scipy.linalg.null_space(flat)


def project_out_trivial(c: Crystal, disp: np.ndarray) -> np.ndarray:
    """Remove the rigid-motion components of a displacement field."""
    basis = trivial_motion_basis(c).reshape(-1, c.positions.size)
    flat = np.asarray(disp, dtype=float).ravel().copy()
    flat -= basis.T @ (basis @ flat)
    return flat.reshape(c.positions.shape)


def rigidity_report(c: Crystal, curvature: float,
                    zero_tol_factor: float = ZERO_TOL_FACTOR) -> RigidityReport:
    """Classify infinitesimal rigidity and compute both spectral constants.

    The crystal is rigid when the number of (near-)zero eigenvalues equals the
    dimension of the rigid-motion space.  The edge gap solves the generalized
    eigenproblem of the Hessian against the edge-difference form on the
    complement of the rigid motions; that projected form is positive definite
    for connected graphs and we fail loudly if it is not.
    """
    a_mat = assemble_hessian(c, curvature)
    eigenvalues = np.sort(scipy.linalg.eigvalsh(a_mat))
    zero_tol = zero_tol_factor * curvature
    zero_count = int(np.sum(np.abs(eigenvalues) < zero_tol))
    if eigenvalues[0] < -zero_tol:
        raise AssertionError(
            f"Hessian form is not positive semidefinite (min eigenvalue "
            f"{eigenvalues[0]:.3g}); crystal construction is inconsistent")

    basis = trivial_motion_basis(c)
    trivial_rank = len(basis)
    rigid = zero_count == trivial_rank

    positive = eigenvalues[np.abs(eigenvalues) >= zero_tol]
    spectral_gap = float(positive[0]) if len(positive) else float("nan")

    comp = orthogonal_complement_basis(c)
    edge_gap = float("nan")
    if comp.shape[1] > 0:
        a_proj = comp.T @ a_mat @ comp
        b_proj = comp.T @ edge_difference_form(c) @ comp
        b_eigs = scipy.linalg.eigvalsh(b_proj)
        if b_eigs[0] <= 1e-12 * max(1.0, b_eigs[-1]):
            raise AssertionError(
                "edge-difference form is singular off the rigid motions; "
                "the neighbor graph must be disconnected or degenerate")
        edge_gap = float(scipy.linalg.eigvalsh(a_proj, b_proj)[0])

    d = c.dim
    return RigidityReport(
        hessian=a_mat,
        eigenvalues=eigenvalues,
        trivial_dim=d * (d + 1) // 2,
        trivial_rank=trivial_rank,
        zero_count=zero_count,
        edge_gap=edge_gap,
        spectral_gap=spectral_gap,
        rigid=rigid,
        zero_tol=zero_tol,
    )


def recover_isometry(points: np.ndarray, displacements: np.ndarray,
                     tol: float = 1e-8):
    """Reconstruct the unique first-order isometry matching the displacements.

    `points` holds the origin followed by d independent basis points (d+1, d);
    `displacements` the corresponding vectors.  Solves the least-squares system
    h_i = X (p_i - p_0) + h_0 over skew-symmetric X and translation h_0 and
    verifies the reproduction residual, raising NotAnIsometryError on failure.
    """
    points = np.asarray(points, dtype=float)
    displacements = np.asarray(displacements, dtype=float)
    npts, d = points.shape
    if displacements.shape != (npts, d):
        raise ValueError("points and displacements must have matching shapes")
    rel = points - points[0]
    if np.linalg.matrix_rank(rel) < d:
        raise ValueError("basis points must span the full space")

    basis = skew_basis(d)
    n_skew = len(basis)
    # unknowns: [skew components, h_0]
    design = np.zeros((npts * d, n_skew + d))
    for i in range(npts):
        rows = slice(i * d, i * d + d)
        for k, bmat in enumerate(basis):
            design[rows, k] = bmat @ rel[i]
        design[rows, n_skew:] = np.eye(d)
    sol, *_ = np.linalg.lstsq(design, displacements.ravel(), rcond=None)

    x = np.tensordot(sol[:n_skew], basis, axes=1)
    h0 = sol[n_skew:]
    recon = rel @ x.T + h0
    scale = max(1.0, float(np.abs(displacements).max()))
    residual = float(np.abs(recon - displacements).max())
    if residual > tol * scale:
        raise NotAnIsometryError(
            f"displacements deviate from a first-order isometry "
            f"(residual {residual:.3g} > {tol:.3g} * {scale:.3g})")
    return x, h0
