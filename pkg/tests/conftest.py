import numpy as np
import pytest

from rigidbrown.crystal import lattice_patch, make_crystal, octahedron, simplex_cell
from rigidbrown.potential import PotentialSpec
from rigidbrown.rigidity import project_out_trivial, rigidity_report

acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def spec():
    return PotentialSpec(a=1.0, w=0.3, k=1.0)


@pytest.fixture(scope="session")
def hex7(spec):
    return lattice_patch(spec, 2, {"shape": "ball", "center": [0.0, 0.0],
                                   "radius": 0.505}, 0.5)


@pytest.fixture(scope="session")
def hex37(spec):
    return lattice_patch(spec, 2, {"shape": "ball", "center": [0.0, 0.0],
                                   "radius": 1.505}, 0.5)


@pytest.fixture(scope="session")
def octa(spec):
    return octahedron(1.0, range_b=spec.b)


@pytest.fixture(scope="session")
def chain6(spec):
    return make_crystal(np.arange(6, dtype=float)[:, None], 1.0, spec.b)


@pytest.fixture(scope="session")
def triangle(spec):
    return simplex_cell(2, 2, 1.0, range_b=spec.b)


@pytest.fixture(scope="session")
def hex7_report(hex7, spec):
    return rigidity_report(hex7, spec.curvature)


@pytest.fixture(scope="session")
def hex37_report(hex37, spec):
    return rigidity_report(hex37, spec.curvature)


def tube_point(c, rng, scale=0.01, rotate=True):
    """Configuration near the isometry orbit: isometry of z plus a projected
    fluctuation of the given edge-sup size."""
    from rigidbrown.rotations import random_rotation

    h = project_out_trivial(c, rng.standard_normal(c.positions.shape))
    edge = h[c.edges[:, 0]] - h[c.edges[:, 1]]
    h *= scale / np.linalg.norm(edge, axis=1).max()
    x = c.positions + h
    if rotate:
        theta = random_rotation(c.dim, rng)
        x = x @ theta.T + rng.standard_normal(c.dim)
    return x
