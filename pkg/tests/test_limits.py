import numpy as np
import pytest
import scipy.stats

from rigidbrown.crystal import lattice_patch, make_crystal
from rigidbrown.errors import (DegenerateDiffusionError, InsufficientDataError,
                               UndersampledPathError)
from rigidbrown.limits import (angular_qv_rates, crystal_moments,
                               empirical_measure, extract_angular_path,
                               law_comparison, rotation_bm_ensemble)
from rigidbrown.rotations import is_rotation, so_exp


def test_single_point_moments(spec):
    c = make_crystal(np.zeros((1, 2)), 1.0, spec.b)
    body = crystal_moments(c, 0.5)
    assert body.rho_bar == 0.25
    assert np.all(body.qbar == 0.0)


def test_disk_patch_mass_converges(spec):
    """rho_bar approaches 2/(sqrt(3) a^2) * pi R^2 as the scale shrinks."""
    radius = 2.0
    target = 2.0 / np.sqrt(3.0) * np.pi * radius**2
    errs = []
    for eps in (0.2, 0.1):
        c = lattice_patch(spec, 2, {"shape": "ball", "center": [0, 0],
                                    "radius": radius}, eps)
        body = crystal_moments(c, eps)
        errs.append(abs(body.rho_bar - target) / target)
    assert errs[1] < errs[0]
    assert errs[1] < 0.1


def test_moments_conjugate_under_rotation(spec, hex37):
    eps = 0.5
    body = crystal_moments(hex37, eps)
    phi = 0.7
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    rotated = make_crystal(hex37.positions @ rot.T, 1.0, spec.b)
    body_r = crystal_moments(rotated, eps)
    assert np.abs(body_r.qbar - rot @ body.qbar @ rot.T).max() < 1e-12
    assert np.allclose(np.sort(body_r.qbar_alpha), np.sort(body.qbar_alpha))


def test_moments_diagonalization(spec, hex37):
    body = crystal_moments(hex37, 0.5)
    diag = body.diag_rotation.T @ body.qbar @ body.diag_rotation
    off = diag - np.diag(np.diag(diag))
    assert np.abs(off).max() <= 1e-10 * np.trace(body.qbar)
    assert is_rotation(body.diag_rotation)


def test_moments_consistency_across_resolutions(spec):
    domain = {"shape": "ball", "center": [0, 0], "radius": 2.0}
    b1 = crystal_moments(lattice_patch(spec, 2, domain, 0.2), 0.2)
    b2 = crystal_moments(lattice_patch(spec, 2, domain, 0.1), 0.1)
    assert abs(b1.rho_bar - b2.rho_bar) <= 0.1 * b2.rho_bar
    assert np.abs(b1.qbar - b2.qbar).max() <= 0.1 * np.trace(b2.qbar)


def test_empirical_measure_conservation(spec, hex37):
    eps = 0.5
    grid = empirical_measure(hex37.positions, eps, {"cells_per_dim": 8})
    assert grid.total_mass == pytest.approx(eps**2 * hex37.n_particles, abs=0)
    assert grid.overflow_mass == 0.0

    # all points in one cell when the grid is a single fat cell
    one = empirical_measure(hex37.positions, eps,
                            {"cells_per_dim": 1, "margin": 0.5})
    assert one.mass.ravel()[0] == pytest.approx(eps**2 * hex37.n_particles)

    # off-grid points land in the overflow bucket, mass still conserved
    clipped = empirical_measure(hex37.positions, eps,
                                {"cells_per_dim": 4, "lo": [-0.2, -0.2],
                                 "hi": [0.2, 0.2]})
    assert clipped.overflow_mass > 0
    assert clipped.total_mass == pytest.approx(eps**2 * hex37.n_particles)


def test_empirical_density_matches_lattice_density(spec):
    """Interior cells of a large patch show the analytic site density
    2 / (sqrt(3) a^2)."""
    eps = 0.1
    c = lattice_patch(spec, 2, {"shape": "ball", "center": [0, 0],
                                "radius": 3.0}, eps)
    grid = empirical_measure(c.positions, eps, {"cells_per_dim": 6, "margin": 0.0})
    density = grid.density
    target = 2.0 / np.sqrt(3.0)
    interior = density[2:4, 2:4]
    assert np.abs(interior - target).max() <= 0.1 * target


def test_extract_constant_and_planar_paths():
    times = np.linspace(0.0, 1.0, 11)
    const = np.tile(np.eye(2), (11, 1, 1))
    path = extract_angular_path(times, const)
    assert np.abs(path.cumulative).max() == 0.0
    assert path.qv[(0, 1)] == 0.0

    phis = np.linspace(0.0, 0.4, 11) ** 2
    rots = np.stack([[[np.cos(p), -np.sin(p)], [np.sin(p), np.cos(p)]]
                     for p in phis])
    path = extract_angular_path(times, rots)
    assert np.abs(path.cumulative[:, 1, 0] - phis).max() < 1e-12


def test_extract_one_parameter_subgroup_so3():
    rng = np.random.default_rng(0)
    x = np.zeros((3, 3))
    x[0, 1], x[0, 2], x[1, 2] = 0.3, -0.2, 0.15
    x = x - x.T
    times = np.linspace(0.0, 1.0, 41)
    rots = np.stack([so_exp(t * x) for t in times])
    path = extract_angular_path(times, rots)
    assert np.abs(path.cumulative[-1] - x).max() < 1e-10


def test_extract_rejects_undersampled():
    times = np.array([0.0, 1.0])
    rots = np.stack([np.eye(2), [[np.cos(2.0), -np.sin(2.0)],
                                 [np.sin(2.0), np.cos(2.0)]]])
    with pytest.raises(UndersampledPathError):
        extract_angular_path(times, rots)


def test_extract_first_order_variant_agrees():
    rng = np.random.default_rng(1)
    phis = np.cumsum(0.01 * rng.standard_normal(50))
    rots = np.stack([[[np.cos(p), -np.sin(p)], [np.sin(p), np.cos(p)]]
                     for p in phis])
    times = np.arange(50.0)
    exact = extract_angular_path(times, rots)
    approx = extract_angular_path(times, rots, first_order=True)
    assert np.abs(exact.increments - approx.increments).max() < 1e-5


def test_qv_rates_match_inverse_moment(hex7, hex37):
    for c in (hex7, hex37):
        rates = angular_qv_rates(c)
        assert rates[(0, 1)] == pytest.approx(1.0 / np.sum(c.positions**2),
                                              rel=1e-12)


def test_reference_bm_terminal_variance_and_orthogonality(spec, hex7):
    body = crystal_moments(hex7, 0.5)
    rate = 1.0 / (body.qbar_alpha[0] + body.qbar_alpha[1])
    t_final = 0.1
    times, thetas = rotation_bm_ensemble(body, t_final, t_final / 400, 2000, seed=3)
    for sample in thetas[::200, -1]:
        assert is_rotation(sample, tol=1e-12)
    angles = np.arctan2(thetas[:, -1, 1, 0], thetas[:, -1, 0, 0])
    var = angles.var(ddof=1)
    predicted = t_final * rate
    assert abs(var - predicted) <= 3 * predicted * np.sqrt(2 / 1999)


def test_reference_bm_step_halving_ks(spec, hex7):
    body = crystal_moments(hex7, 0.5)
    t_final = 0.1
    _, th1 = rotation_bm_ensemble(body, t_final, t_final / 400, 2000, seed=3)
    _, th2 = rotation_bm_ensemble(body, t_final, t_final / 800, 2000, seed=4)
    a1 = np.arctan2(th1[:, -1, 1, 0], th1[:, -1, 0, 0])
    a2 = np.arctan2(th2[:, -1, 1, 0], th2[:, -1, 0, 0])
    assert scipy.stats.ks_2samp(a1, a2).pvalue > 0.01


def test_reference_bm_so3_runs(spec, octa):
    body = crystal_moments(octa, 0.5)
    times, thetas = rotation_bm_ensemble(body, 0.05, 0.001, 20, seed=1)
    for sample in thetas[:, -1]:
        assert is_rotation(sample, tol=1e-10)


def test_reference_bm_rejects_degenerate_moments():
    from rigidbrown.limits import MacroscopicBody
    body = MacroscopicBody(rho_bar=1.0, qbar=np.zeros((2, 2)),
                           qbar_alpha=np.zeros(2), diag_rotation=np.eye(2),
                           epsilon=0.5)
    with pytest.raises(DegenerateDiffusionError):
        rotation_bm_ensemble(body, 1.0, 0.01, 10, seed=0)


def test_extract_of_reference_bm_recovers_rates(spec, octa):
    """Quadratic variation of extracted increments matches the driving rates
    for every plane of so(3)."""
    body = crystal_moments(octa, 0.5)
    t_final, dt, n_paths = 0.02, 1e-4, 1000
    times, thetas = rotation_bm_ensemble(body, t_final, dt, n_paths, seed=7)
    pooled = {}
    for p in range(n_paths):
        path = extract_angular_path(times, thetas[p])
        for pair, qv in path.qv.items():
            pooled[pair] = pooled.get(pair, 0.0) + qv
    n_inc = n_paths * (len(times) - 1)
    for (a, b), total in pooled.items():
        rate = total / (n_paths * t_final)
        predicted = 1.0 / (body.qbar_alpha[a] + body.qbar_alpha[b])
        assert abs(rate - predicted) <= 3 * predicted * np.sqrt(2.0 / n_inc)


def test_law_comparison_requires_survivors(spec, hex7, hex7_report):
    from rigidbrown.dynamics import SdeConfig, cooling_schedule, simulate_ensemble

    beta = cooling_schedule(0.5, hex7, hex7_report, nu=2.5)
    cfg = SdeConfig(epsilon=0.5, beta=beta, dim=2, t_final=0.002,
                    record_every=2e-4, cap_c=0.5**2.5, seed=2)
    records = simulate_ensemble(hex7, spec, cfg, 5)
    body = crystal_moments(hex7, 0.5)
    with pytest.raises(InsufficientDataError):
        law_comparison(records, hex7, body, 0.5, min_surviving=30)
