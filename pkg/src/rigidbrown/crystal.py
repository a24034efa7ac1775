"""Construction of equal-spacing particle configurations and their neighbor graphs.

A configuration qualifies when every pair of particles is either at the
lattice spacing a exactly (a neighboring pair, an edge of the graph) or
strictly beyond the interaction range b.  Constructors produce centered,
validated instances; the neighbor graph must be connected.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import CrystalValidationError, JoinDeficientError, RangeConditionError

EDGE_TOL = 1e-9  # |r - a| <= EDGE_TOL * a counts as a neighboring pair


@dataclass(frozen=True)
class Crystal:
    """Immutable particle configuration with spacing-a neighbor graph."""

    dim: int
    spacing: float
    positions: np.ndarray  # (N, dim)
    edges: np.ndarray      # (E, 2) int, i < j
    graph_radius: int
    centered: bool = True

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    def adjacency(self) -> np.ndarray:
        """Dense boolean neighbor matrix."""
        n = self.n_particles
        adj = np.zeros((n, n), dtype=bool)
        if len(self.edges):
            adj[self.edges[:, 0], self.edges[:, 1]] = True
            adj[self.edges[:, 1], self.edges[:, 0]] = True
        return adj

    def to_json(self) -> str:
        return json.dumps({
            "dim": self.dim,
            "a": self.spacing,
            "positions": self.positions.tolist(),
            "edges": self.edges.tolist(),
        })


def lattice_constant(d: int) -> float:
    """Shortest non-neighbor distance on the unit triangular lattice.

    Equals 2 for d = 1, sqrt(3) for d = 2 and sqrt(2) for d >= 3; the
    interaction range must stay below this multiple of the spacing for
    lattice configurations to satisfy the spacing/range dichotomy.
    """
    if d == 1:
        return 2.0
    if d == 2:
        return np.sqrt(3.0)
    return np.sqrt(2.0)


def triangular_basis(d: int) -> np.ndarray:
    """Unit basis vectors at mutual 60 degrees, as columns of a (d, d) matrix.

    The Gram matrix is (1 + delta_ab)/2; the construction is the upper
    triangular Cholesky factor, so e_1 = (1, 0, ..., 0).
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    gram = 0.5 * (np.eye(d) + np.ones((d, d)))
    lower = np.linalg.cholesky(gram)
    return lower.T.copy()


def detect_edges(positions: np.ndarray, spacing: float) -> np.ndarray:
    """All index pairs (i < j) at distance `spacing` within tolerance."""
    n = len(positions)
    ii, jj = np.triu_indices(n, k=1)
    dist = np.linalg.norm(positions[ii] - positions[jj], axis=1)
    mask = np.abs(dist - spacing) <= EDGE_TOL * spacing
    return np.column_stack([ii[mask], jj[mask]]).astype(np.intp)


def _hop_distances(n: int, edges: np.ndarray) -> np.ndarray:
    if n == 1:
        return np.zeros((1, 1))
    data = np.ones(len(edges))
    graph = csr_matrix((data, (edges[:, 0], edges[:, 1])), shape=(n, n))
    return shortest_path(graph, method="D", directed=False, unweighted=True)


def graph_radius(c: Crystal) -> int:
    """Maximal hop count between any two particles (graph diameter)."""
    return c.graph_radius


def center(positions: np.ndarray) -> np.ndarray:
    """Shift so the configuration mean sits at the origin."""
    return positions - positions.mean(axis=0)


def make_crystal(positions: np.ndarray, spacing: float, range_b: float,
                 recenter: bool = True) -> Crystal:
    """Center, detect edges, compute the hop radius, and validate.

    Raises CrystalValidationError when the spacing/range dichotomy fails or
    the neighbor graph is disconnected.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or len(positions) == 0:
        raise ValueError("positions must be a nonempty (N, d) array")
    if recenter:
        positions = center(positions)
    edges = detect_edges(positions, spacing)

    report = validate_positions(positions, spacing, range_b, edges)
    if not report["ok"]:
        raise CrystalValidationError(
            "; ".join(report["problems"]), offending_pairs=report["offending_pairs"])

    hops = _hop_distances(len(positions), edges)
    radius = int(hops.max()) if np.isfinite(hops).all() else -1
    is_centered = bool(np.linalg.norm(positions.mean(axis=0)) <= 1e-9 * spacing)
    positions.setflags(write=False)
    edges.setflags(write=False)
    return Crystal(dim=positions.shape[1], spacing=spacing, positions=positions,
                   edges=edges, graph_radius=radius, centered=is_centered)


def validate_positions(positions: np.ndarray, spacing: float, range_b: float,
                       edges: np.ndarray | None = None) -> dict:
    """Check the pairwise dichotomy (= spacing or > range) and connectivity.

    Returns {"ok", "problems", "offending_pairs", "graph_radius", "n_edges"}.
    """
    positions = np.asarray(positions, dtype=float)
    n = len(positions)
    if edges is None:
        edges = detect_edges(positions, spacing)
    problems, offending = [], []

    ii, jj = np.triu_indices(n, k=1)
    dist = np.linalg.norm(positions[ii] - positions[jj], axis=1)
    is_edge = np.abs(dist - spacing) <= EDGE_TOL * spacing
    bad = ~is_edge & (dist <= range_b)
    if np.any(bad):
        offending = [(int(i), int(j), float(r))
                     for i, j, r in zip(ii[bad], jj[bad], dist[bad])]
        shown = ", ".join(f"({i},{j}): r={r:.6g}" for i, j, r in offending[:5])
        problems.append(
            f"{len(offending)} pair(s) neither at spacing nor beyond range: {shown}")

    radius = -1
    if n > 1 and len(edges) == 0:
        problems.append("no neighboring pairs at the spacing distance")
    else:
        hops = _hop_distances(n, edges)
        if not np.isfinite(hops).all():
            problems.append("neighbor graph is disconnected")
        else:
            radius = int(hops.max())

    return {"ok": not problems, "problems": problems, "offending_pairs": offending,
            "graph_radius": radius, "n_edges": int(len(edges))}


def validate_crystal(c: Crystal, range_b: float) -> dict:
    """Re-run the dichotomy/connectivity checks on an existing crystal."""
    return validate_positions(c.positions, c.spacing, range_b, c.edges)


def lattice_patch(spec, d: int, domain: dict, epsilon: float) -> Crystal:
    """All triangular-lattice sites (spacing spec.a) inside the blown-up domain.

    `domain` is macroscopic: {"shape": "ball", "center": [...], "radius": r}
    or {"shape": "box", "lo": [...], "hi": [...]}; membership is tested for
    epsilon * z in the domain.  Requires range < lattice_constant(d) * spacing
    so that the dichotomy holds automatically on the lattice.
    """
    a, b = spec.a, spec.b
    if not b < lattice_constant(d) * a:
        raise RangeConditionError(
            f"interaction range b={b:.6g} must be below {lattice_constant(d):.6g} * a "
            f"for a {d}-dimensional lattice configuration to exist")

    basis = a * triangular_basis(d)
    shape = domain.get("shape", "ball")
    if shape == "ball":
        center_mic = np.asarray(domain.get("center", np.zeros(d)), dtype=float) / epsilon
        radius_mic = float(domain["radius"]) / epsilon
        lo = center_mic - radius_mic
        hi = center_mic + radius_mic
    elif shape == "box":
        lo = np.asarray(domain["lo"], dtype=float) / epsilon
        hi = np.asarray(domain["hi"], dtype=float) / epsilon
    else:
        raise ValueError(f"unknown domain shape {shape!r}")

    # integer-coefficient bounding box from the corners of the real-space box
    inv = np.linalg.inv(basis)
    corners = np.array(np.meshgrid(*zip(lo, hi))).T.reshape(-1, d)
    xi_corners = corners @ inv.T
    xi_lo = np.floor(xi_corners.min(axis=0)).astype(int) - 1
    xi_hi = np.ceil(xi_corners.max(axis=0)).astype(int) + 1

    grids = np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(xi_lo, xi_hi)],
                        indexing="ij")
    xi = np.stack([g.ravel() for g in grids], axis=1)
    pts = xi @ basis.T

    if shape == "ball":
        keep = np.linalg.norm(pts - center_mic, axis=1) <= radius_mic
    else:
        keep = np.all((pts >= lo) & (pts <= hi), axis=1)
    pts = pts[keep]
    if len(pts) == 0:
        raise ValueError("domain contains no lattice sites at this scale")

    return make_crystal(pts, spacing=a, range_b=b)


def simplex_cell(n: int, d: int, a: float, range_b: float | None = None) -> Crystal:
    """Regular n-simplex with side a embedded in dimension d (n <= d), centered.

    n + 1 points, all pairwise distances equal to a, affine hull of dimension n.
    """
    if n > d:
        raise ValueError(f"cannot embed an {n}-simplex in dimension {d}")
    if n < 1:
        raise ValueError("need n >= 1")
    basis = a * triangular_basis(n)
    pts = np.vstack([np.zeros(n), basis.T])
    if d > n:
        pts = np.hstack([pts, np.zeros((n + 1, d - n))])
    if range_b is None:
        range_b = 1.3 * a
    return make_crystal(pts, spacing=a, range_b=range_b)


def octahedron(a: float, range_b: float | None = None) -> Crystal:
    """Regular octahedron with edge a: 12 neighboring pairs, opposite vertices
    at sqrt(2) a (beyond range for b < sqrt(2) a)."""
    half = a / np.sqrt(2.0)
    pts = np.vstack([half * np.eye(3), -half * np.eye(3)])
    if range_b is None:
        range_b = 1.3 * a
    return make_crystal(pts, spacing=a, range_b=range_b)


def overlap_indices(c1: Crystal, c2: Crystal, tol: float | None = None):
    """Index pairs (i in c1, j in c2) of coinciding points."""
    if tol is None:
        tol = 1e-9 * c1.spacing
    diff = c1.positions[:, None, :] - c2.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    return np.argwhere(dist <= tol)


def overlap_dimension(c1: Crystal, c2: Crystal, tol: float | None = None) -> int:
    """Dimension of the affine hull of the shared points (-1 when disjoint)."""
    pairs = overlap_indices(c1, c2, tol)
    if len(pairs) == 0:
        return -1
    shared = c1.positions[pairs[:, 0]]
    rel = shared[1:] - shared[0]
    if len(rel) == 0:
        return 0
    sv = np.linalg.svd(rel, compute_uv=False)
    return int(np.sum(sv > 1e-9 * c1.spacing))


def join(c1: Crystal, c2: Crystal, range_b: float, recenter: bool = True) -> Crystal:
    """Merge two crystals whose overlap affinely spans at least dimension d - 1.

    Duplicated points are identified, edges are recomputed from scratch and the
    result is validated; a thinner overlap raises JoinDeficientError because
    rigidity of the union is then not guaranteed.  Pass recenter=False when
    assembling incrementally in shared absolute coordinates.
    """
    if c1.dim != c2.dim or c1.spacing != c2.spacing:
        raise ValueError("can only join crystals of equal dimension and spacing")
    odim = overlap_dimension(c1, c2)
    if odim < c1.dim - 1:
        raise JoinDeficientError(
            f"overlap spans affine dimension {odim}, need at least {c1.dim - 1}")

    pairs = overlap_indices(c1, c2)
    dup_in_c2 = set(int(j) for j in pairs[:, 1])
    extra = [p for j, p in enumerate(c2.positions) if j not in dup_in_c2]
    merged = np.vstack([c1.positions] + ([extra] if extra else []))
    return make_crystal(merged, spacing=c1.spacing, range_b=range_b,
                        recenter=recenter)


def transform(c: Crystal, rotation: np.ndarray | None = None,
              translation: np.ndarray | None = None, range_b: float | None = None) -> Crystal:
    """Apply an isometry; the result is generally not centered."""
    pts = c.positions
    if rotation is not None:
        pts = pts @ np.asarray(rotation, dtype=float).T
    if translation is not None:
        pts = pts + np.asarray(translation, dtype=float)
    if range_b is None:
        range_b = 1.3 * c.spacing
    return make_crystal(pts, spacing=c.spacing, range_b=range_b, recenter=False)


def crystal_from_json(text: str, range_b: float) -> Crystal:
    """Rebuild (and revalidate) a crystal from its JSON form."""
    obj = json.loads(text)
    positions = np.asarray(obj["positions"], dtype=float)
    return make_crystal(positions, spacing=float(obj["a"]), range_b=range_b)
