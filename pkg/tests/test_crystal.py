import json

import numpy as np
import pytest

from rigidbrown.crystal import (crystal_from_json, join, lattice_constant,
                                lattice_patch, make_crystal, octahedron,
                                simplex_cell, transform, triangular_basis,
                                validate_crystal)
from rigidbrown.errors import (CrystalValidationError, JoinDeficientError,
                               RangeConditionError)
from rigidbrown.potential import PotentialSpec


def test_triangular_basis_low_dimensions():
    assert np.array_equal(triangular_basis(1), [[1.0]])
    b2 = triangular_basis(2)
    assert np.allclose(b2[:, 0], [1.0, 0.0])
    assert np.allclose(b2[:, 1], [0.5, np.sqrt(3) / 2])
    assert np.dot(b2[:, 0], b2[:, 1]) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_triangular_basis_gram(d):
    b = triangular_basis(d)
    gram = b.T @ b
    target = 0.5 * (np.eye(d) + np.ones((d, d)))
    assert np.abs(gram - target).max() < 1e-12


def brute_force_patch(radius_mic, d=2):
    """Independent lattice enumeration: all integer combinations in a wide box,
    kept if within the ball."""
    basis = triangular_basis(d)
    rng = int(np.ceil(radius_mic * 2)) + 2
    pts = []
    for xi in np.ndindex(*([2 * rng + 1] * d)):
        coeff = np.array(xi) - rng
        p = basis @ coeff
        if np.linalg.norm(p) <= radius_mic:
            pts.append(p)
    return np.array(pts)


def test_hex7_patch_matches_brute_force(spec, hex7):
    oracle = brute_force_patch(1.01)
    assert hex7.n_particles == len(oracle) == 7
    assert len(hex7.edges) == 12
    # same point set after centering
    oracle = oracle - oracle.mean(axis=0)
    for p in oracle:
        assert np.min(np.linalg.norm(hex7.positions - p, axis=1)) < 1e-9


def test_hex37_patch_matches_brute_force(spec, hex37):
    oracle = brute_force_patch(3.01)
    assert hex37.n_particles == len(oracle) == 37
    assert len(hex37.edges) == 90


def test_chain_patch(spec):
    c = lattice_patch(spec, 1, {"shape": "box", "lo": [-0.25], "hi": [5.25]}, 1.0)
    assert c.n_particles == 6
    assert len(c.edges) == 5
    assert c.graph_radius == 5


def test_patches_validate(spec, hex7, hex37):
    for c in (hex7, hex37):
        report = validate_crystal(c, spec.b)
        assert report["ok"], report["problems"]
        assert c.centered
        assert np.linalg.norm(c.positions.mean(axis=0)) < 1e-9


def test_range_condition_enforced():
    wide = PotentialSpec(a=1.0, w=0.9, k=1.0)  # b = 1.9 > sqrt(3)
    with pytest.raises(RangeConditionError):
        lattice_patch(wide, 2, {"shape": "ball", "center": [0, 0], "radius": 1.01}, 1.0)
    assert lattice_constant(1) == 2.0
    assert lattice_constant(2) == pytest.approx(np.sqrt(3))
    assert lattice_constant(3) == pytest.approx(np.sqrt(2))


def test_empty_patch_rejected(spec):
    with pytest.raises(ValueError):
        lattice_patch(spec, 2, {"shape": "ball", "center": [0.4, 0.4],
                                "radius": 0.1}, 1.0)


def test_simplex_cells(spec, triangle):
    assert triangle.n_particles == 3
    assert len(triangle.edges) == 3
    tet = simplex_cell(3, 3, 1.0, range_b=spec.b)
    assert tet.n_particles == 4
    assert len(tet.edges) == 6
    dist = np.linalg.norm(tet.positions[:, None] - tet.positions[None, :], axis=2)
    off = dist[~np.eye(4, dtype=bool)]
    assert np.abs(off - 1.0).max() < 1e-12
    with pytest.raises(ValueError):
        simplex_cell(3, 2, 1.0)


def test_octahedron_geometry(spec, octa):
    assert octa.n_particles == 6
    assert len(octa.edges) == 12
    dist = np.linalg.norm(octa.positions[:, None] - octa.positions[None, :], axis=2)
    off = np.unique(np.round(dist[~np.eye(6, dtype=bool)], 12))
    assert np.allclose(off, [1.0, np.sqrt(2)])


def test_square_is_a_valid_crystal(spec):
    square = make_crystal(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]), 1.0, spec.b)
    assert len(square.edges) == 4  # diagonals at sqrt(2) > b stay out of range
    assert validate_crystal(square, spec.b)["ok"]


def test_dichotomy_violation_reports_pairs(spec):
    with pytest.raises(CrystalValidationError) as err:
        make_crystal(np.array([[0.0, 0.0], [1.15, 0.0]]), 1.0, spec.b)
    assert err.value.offending_pairs


def _triangle_at(p0, p1, p2, spec):
    return make_crystal(np.array([p0, p1, p2], dtype=float), 1.0, spec.b,
                        recenter=False)


def test_join_shared_edge_makes_rhombus(spec):
    s3 = np.sqrt(3) / 2
    t1 = _triangle_at([0, 0], [1, 0], [0.5, s3], spec)
    t2 = _triangle_at([1, 0], [0.5, s3], [1.5, s3], spec)
    rhomb = join(t1, t2, spec.b)
    assert rhomb.n_particles == 4
    assert len(rhomb.edges) == 5


def test_join_single_vertex_is_deficient(spec):
    s3 = np.sqrt(3) / 2
    t1 = _triangle_at([0, 0], [1, 0], [0.5, s3], spec)
    t2 = _triangle_at([0, 0], [-1, 0], [-0.5, -s3], spec)
    with pytest.raises(JoinDeficientError):
        join(t1, t2, spec.b)


def test_join_idempotent(spec, triangle):
    again = join(triangle, triangle, spec.b)
    assert np.allclose(again.positions, triangle.positions)
    assert np.array_equal(again.edges, triangle.edges)


def test_point_group_invariance_under_60_degrees(spec, hex7, hex37):
    phi = np.pi / 3
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    for c in (hex7, hex37):
        rotated = c.positions @ rot.T
        for p in rotated:
            assert np.min(np.linalg.norm(c.positions - p, axis=1)) < 1e-9


def test_graph_radius_scales_with_resolution(spec):
    domain = {"shape": "ball", "center": [0.0, 0.0], "radius": 1.505}
    c1 = lattice_patch(spec, 2, domain, 0.5)
    c2 = lattice_patch(spec, 2, domain, 0.25)
    assert c2.graph_radius >= 1.7 * c1.graph_radius


def test_serialization_round_trip(spec, hex7):
    text = hex7.to_json()
    obj = json.loads(text)
    assert set(obj) == {"dim", "a", "positions", "edges"}
    back = crystal_from_json(text, spec.b)
    assert np.allclose(back.positions, hex7.positions)
    assert np.array_equal(back.edges, hex7.edges)


def test_transform_keeps_distances(spec, hex7):
    phi = 0.3
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    moved = transform(hex7, rotation=rot, translation=[2.0, -1.0], range_b=spec.b)
    assert len(moved.edges) == len(hex7.edges)
    assert not moved.centered
