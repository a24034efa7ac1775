import warnings

import numpy as np
import pytest

from rigidbrown.crystal import join, make_crystal, simplex_cell
from rigidbrown.errors import NotAnIsometryError
from rigidbrown.potential import eval_potential
from rigidbrown.rigidity import (assemble_hessian, energy_form, force_form,
                                 orthogonal_complement_basis, project_out_trivial,
                                 recover_isometry, rigidity_report,
                                 trivial_motion_basis)
from rigidbrown.rotations import skew_basis


def hamiltonian(x, spec):
    n = len(x)
    ii, jj = np.triu_indices(n, 1)
    r = np.linalg.norm(x[ii] - x[jj], axis=1)
    return float(np.sum(eval_potential(spec, r)))


def test_two_point_chain_hessian(spec):
    c = make_crystal(np.array([[0.0], [1.0]]), 1.0, spec.b)
    a_mat = assemble_hessian(c, spec.curvature)
    chk = spec.curvature
    assert np.allclose(a_mat, chk * np.array([[1, -1], [-1, 1]]))


def test_hessian_kills_rigid_motions(spec, hex7, octa):
    for c in (hex7, octa):
        a_mat = assemble_hessian(c, spec.curvature)
        n, d = c.positions.shape
        for alpha in range(d):
            t = np.zeros((n, d))
            t[:, alpha] = 1.0
            assert np.abs(a_mat @ t.ravel()).max() < 1e-12
        for x in skew_basis(d):
            rot = (c.positions @ x.T).ravel()
            assert np.abs(a_mat @ rot).max() < 1e-10


def fd_hessian_of_energy(c, spec, h=1e-3):
    """Richardson-extrapolated central second differences of the energy."""
    z = c.positions
    n = z.size

    def ham_flat(flat):
        return hamiltonian(flat.reshape(z.shape), spec)

    def at_step(hh):
        out = np.zeros((n, n))
        flat = z.ravel()
        for p in range(n):
            for q in range(p, n):
                ep = np.zeros(n); ep[p] = hh
                eq = np.zeros(n); eq[q] = hh
                v = (ham_flat(flat + ep + eq) - ham_flat(flat + ep - eq)
                     - ham_flat(flat - ep + eq) + ham_flat(flat - ep - eq)) / (4 * hh * hh)
                out[p, q] = out[q, p] = v
        return out

    return (4.0 * at_step(h / 2) - at_step(h)) / 3.0


def test_hessian_matches_finite_differences_on_hex7(spec, hex7):
    a_mat = assemble_hessian(hex7, spec.curvature)
    fd = fd_hessian_of_energy(hex7, spec)
    assert np.abs(fd - a_mat).max() <= 1e-6 * np.abs(a_mat).max()


def test_forms_vanish_on_translations(spec, hex7):
    t = np.tile([0.3, -0.2], (hex7.n_particles, 1))
    assert energy_form(hex7, spec.curvature, t) == 0.0
    assert force_form(hex7, spec.curvature, t) == 0.0


def test_two_point_chain_eigen_relation(spec):
    c = make_crystal(np.array([[0.0], [1.0]]), 1.0, spec.b)
    rng = np.random.default_rng(0)
    for _ in range(5):
        h = rng.standard_normal((2, 1))
        e1 = energy_form(c, spec.curvature, h)
        e2 = force_form(c, spec.curvature, h)
        assert e2 == pytest.approx(2 * spec.curvature * e1, rel=1e-12)


def test_force_form_identities(spec, hex7):
    """force_form equals |A h|^2 and a quarter of the squared gradient of
    energy_form (finite differences are exact for quadratics)."""
    a_mat = assemble_hessian(hex7, spec.curvature)
    rng = np.random.default_rng(1)
    step = 1e-4
    n, d = hex7.positions.shape
    for _ in range(100):
        h = rng.standard_normal((n, d))
        e2 = force_form(hex7, spec.curvature, h)
        ah = a_mat @ h.ravel()
        assert e2 == pytest.approx(float(ah @ ah), rel=1e-8)

    for _ in range(5):
        h = rng.standard_normal((n, d))
        grad = np.zeros(n * d)
        flat = h.ravel()
        for p in range(n * d):
            e = np.zeros(n * d); e[p] = step
            grad[p] = (energy_form(hex7, spec.curvature, flat + e)
                       - energy_form(hex7, spec.curvature, flat - e)) / (2 * step)
        e2 = force_form(hex7, spec.curvature, h)
        assert e2 == pytest.approx(0.25 * float(grad @ grad), rel=1e-8)


def test_trivial_basis_sizes(spec, triangle, chain6):
    basis = trivial_motion_basis(triangle)
    assert len(basis) == 3
    for v in basis:
        assert energy_form(triangle, spec.curvature, v) <= 1e-12
    assert len(trivial_motion_basis(chain6)) == 1


def test_classification_matches_known_examples(spec, triangle, octa, chain6):
    chk = spec.curvature
    assert rigidity_report(triangle, chk).rigid
    assert rigidity_report(triangle, chk).zero_count == 3

    square = make_crystal(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]), 1.0, spec.b)
    rep = rigidity_report(square, chk)
    assert not rep.rigid and rep.zero_count == 4

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        collinear = make_crystal(np.array([[0, 0], [1, 0], [2, 0.0]]), 1.0, spec.b)
        rep = rigidity_report(collinear, chk)
    assert not rep.rigid  # perpendicular buckling is an extra zero mode

    rep = rigidity_report(chain6, chk)
    assert rep.rigid
    assert rep.edge_gap == pytest.approx(chk, rel=1e-9)

    tet = simplex_cell(3, 3, 1.0, range_b=spec.b)
    assert rigidity_report(tet, chk).rigid
    assert rigidity_report(tet, chk).zero_count == 6
    assert rigidity_report(octa, chk).rigid

    two = make_crystal(np.array([[0.0], [1.0]]), 1.0, spec.b)
    assert rigidity_report(two, chk).spectral_gap == pytest.approx(2 * chk, rel=1e-12)


def test_spectral_sandwiches_on_random_fluctuations(spec, hex7, hex7_report):
    rng = np.random.default_rng(2)
    chk = spec.curvature
    lam1, lam2 = hex7_report.edge_gap, hex7_report.spectral_gap
    for _ in range(200):
        h = project_out_trivial(hex7, rng.standard_normal(hex7.positions.shape))
        e1 = energy_form(hex7, chk, h)
        e2 = force_form(hex7, chk, h)
        edge = h[hex7.edges[:, 0]] - h[hex7.edges[:, 1]]
        nabla2 = float(np.sum(edge**2))
        assert lam2 * e1 <= e2 * (1 + 1e-10)
        assert lam1 * nabla2 <= e1 * (1 + 1e-10)
        assert e1 <= chk * nabla2 * (1 + 1e-10)

    # equality of the spectral bound on the soft eigenvector
    a_mat = assemble_hessian(hex7, chk)
    comp = orthogonal_complement_basis(hex7)
    import scipy.linalg
    vals, vecs = scipy.linalg.eigh(comp.T @ a_mat @ comp)
    soft = comp @ vecs[:, 0]
    e1 = energy_form(hex7, chk, soft)
    e2 = force_form(hex7, chk, soft)
    assert e2 == pytest.approx(lam2 * e1, rel=1e-9)


def test_triangle_strip_joins_are_rigid(spec):
    s3 = np.sqrt(3) / 2
    strip = make_crystal(np.array([[0, 0], [1, 0], [0.5, s3]]), 1.0, spec.b,
                         recenter=False)
    pieces = [
        np.array([[0.5, s3], [1.5, s3], [1, 0]]),   # inverted triangle
        np.array([[1, 0], [2, 0], [1.5, s3]]),
        np.array([[1.5, s3], [2.5, s3], [2, 0]]),
    ]
    for pts in pieces:
        tri = make_crystal(pts, 1.0, spec.b, recenter=False)
        strip = join(strip, tri, spec.b, recenter=False)
    strip = make_crystal(strip.positions, 1.0, spec.b)
    rep = rigidity_report(strip, spec.curvature)
    assert rep.rigid and rep.zero_count == 3


def test_tet_octa_assembly_rigid(spec, octa):
    """Octahedron joined with a tetrahedron on a shared face stays rigid."""
    half = 1.0 / np.sqrt(2.0)
    face = octa.positions[[0, 1, 2]]
    centroid = face.mean(axis=0)
    normal = centroid / np.linalg.norm(centroid)
    apex = centroid + normal * np.sqrt(2.0 / 3.0)
    tet = make_crystal(np.vstack([face, apex]), 1.0, spec.b, recenter=False)
    assembly = join(make_crystal(octa.positions, 1.0, spec.b, recenter=False),
                    tet, spec.b)
    rep = rigidity_report(assembly, spec.curvature)
    assert assembly.n_particles == 7
    assert rep.rigid and rep.zero_count == 6


def test_recover_isometry_translation_and_rotation():
    pts = np.vstack([np.zeros(2), np.eye(2)])
    h0 = np.array([0.4, -0.1])
    x, t = recover_isometry(pts, np.tile(h0, (3, 1)))
    assert np.abs(x).max() < 1e-12
    assert np.allclose(t, h0)

    disp = np.array([[0.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    x, t = recover_isometry(pts, disp)
    assert np.allclose(x, [[0.0, -1.0], [1.0, 0.0]])
    assert np.abs(t).max() < 1e-12


def test_recover_isometry_round_trip_so3():
    rng = np.random.default_rng(3)
    basis3 = skew_basis(3)
    for _ in range(10):
        x_true = np.tensordot(rng.standard_normal(3), basis3, axes=1)
        pts = np.vstack([np.zeros(3), rng.standard_normal((3, 3))])
        while np.linalg.matrix_rank(pts[1:] - pts[0]) < 3:
            pts = np.vstack([np.zeros(3), rng.standard_normal((3, 3))])
        h0 = rng.standard_normal(3)
        disp = (pts - pts[0]) @ x_true.T + h0
        x, t = recover_isometry(pts, disp)
        assert np.abs(x - x_true).max() < 1e-10
        assert np.abs(t - h0).max() < 1e-10


def test_recover_isometry_rejects_stretch():
    pts = np.vstack([np.zeros(2), np.eye(2)])
    disp = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])  # stretches the first leg
    with pytest.raises(NotAnIsometryError):
        recover_isometry(pts, disp)
