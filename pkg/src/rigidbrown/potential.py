"""Radial pair potential with a compactly supported C^3 well.

The potential is zero outside the interval (a - w, a + w) and inside it takes
the form

    U(r) = -k * ((r - a)^2 - w^2)^4 / w^8,

which has a unique nondegenerate minimum U(a) = -k and vanishes together with
its first three derivatives at both seams, so the function is C^3 on [0, oo).
The curvature at the minimum is U''(a) = 8k / w^2.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CoincidentPointsError


@dataclass(frozen=True)
class PotentialSpec:
    """Parameters of the pair well: minimum distance a, half-width w, depth k."""

    a: float = 1.0
    w: float = 0.3
    k: float = 1.0

    def __post_init__(self):
        # w >= a is left to validate_assumption so bad parameters can be
        # reported as a diagnostic instead of an exception
        if not (self.a > 0 and self.w > 0 and self.k > 0):
            raise ValueError("potential parameters a, w, k must be positive")

    @property
    def b(self) -> float:
        """Interaction range: U(r) = 0 for every r >= b."""
        return self.a + self.w

    @property
    def curvature(self) -> float:
        """Second derivative of U at the minimum, 8k / w^2."""
        return 8.0 * self.k / self.w**2


# Derivatives are written in the scaled offset sigma = (r - a)/w with
# t = sigma^2 - 1, so that U(a) = -k holds exactly in floating point.

def _scaled(spec, r):
    r = np.asarray(r, dtype=float)
    sigma = (r - spec.a) / spec.w
    return sigma, sigma * sigma - 1.0, np.abs(sigma) < 1.0


def eval_potential(spec: PotentialSpec, r):
    """Evaluate U(r) for scalar or array r >= 0."""
    sigma, t, inside = _scaled(spec, r)
    val = np.where(inside, -spec.k * t**4, 0.0)
    if val.ndim == 0:
        return float(val)
    return val


def eval_derivative(spec: PotentialSpec, r):
    """First derivative U'(r)."""
    sigma, t, inside = _scaled(spec, r)
    val = np.where(inside, -(8.0 * spec.k / spec.w) * sigma * t**3, 0.0)
    if val.ndim == 0:
        return float(val)
    return val


def eval_second_derivative(spec: PotentialSpec, r):
    """Second derivative U''(r)."""
    sigma, t, inside = _scaled(spec, r)
    val = np.where(inside,
                   -(8.0 * spec.k / spec.w**2) * t * t * (7.0 * sigma * sigma - 1.0),
                   0.0)
    if val.ndim == 0:
        return float(val)
    return val


def eval_third_derivative(spec: PotentialSpec, r):
    """Third derivative U'''(r)."""
    sigma, t, inside = _scaled(spec, r)
    val = np.where(inside,
                   -(48.0 * spec.k / spec.w**3) * sigma * t * (7.0 * sigma * sigma - 3.0),
                   0.0)
    if val.ndim == 0:
        return float(val)
    return val


def pair_force(spec: PotentialSpec, xi: np.ndarray, xj: np.ndarray) -> np.ndarray:
    """Force -grad_xi U(xi - xj) on particle i exerted by particle j.

    Antisymmetric under swapping the two particles by construction.  Raises
    CoincidentPointsError for xi == xj: the magnitude would be zero (the well
    is flat near the origin) but the direction is undefined.
    """
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    dx = xi - xj
    r = float(np.linalg.norm(dx))
    if r == 0.0:
        raise CoincidentPointsError("cannot evaluate a pair force at zero separation")
    du = eval_derivative(spec, r)
    return -du / r * dx


def pair_hessian(spec: PotentialSpec, rvec: np.ndarray) -> np.ndarray:
    """Hessian of x -> U(|x|) evaluated at the separation vector rvec.

    Splits into the radial part U''(r) rhat rhat^T and the tangential part
    (U'(r)/r)(I - rhat rhat^T); at |rvec| = a only the radial part survives.
    """
    rvec = np.asarray(rvec, dtype=float)
    d = rvec.shape[0]
    r = float(np.linalg.norm(rvec))
    if r == 0.0:
        raise CoincidentPointsError("cannot evaluate a pair Hessian at zero separation")
    if r >= spec.b or r <= spec.a - spec.w:
        return np.zeros((d, d))
    rhat = rvec / r
    proj = np.outer(rhat, rhat)
    d2 = eval_second_derivative(spec, r)
    d1 = eval_derivative(spec, r)
    return d2 * proj + (d1 / r) * (np.eye(d) - proj)


# one-sided third-derivative stencil, O(h^2): f'''(x) from f(x), f(x+h), ...
_THIRD_FWD = np.array([-2.5, 9.0, -12.0, 7.0, -1.5])


def _one_sided_third(f, x0: float, h: float, direction: int) -> float:
    pts = x0 + direction * h * np.arange(5)
    vals = np.array([f(p) for p in pts])
    return direction * float(_THIRD_FWD @ vals) / h**3


@dataclass
class PotentialReport:
    """Outcome of the numerical well-shape checks."""

    ok: bool
    violations: list = field(default_factory=list)
    seam_jumps: dict = field(default_factory=dict)


def validate_assumption(spec: PotentialSpec, grid_step: float = 1e-4) -> PotentialReport:
    """Numerically confirm the well shape: unique minimum, positive curvature,
    C^3 seams, and vanishing beyond the range.

    Returns a report listing every violated condition instead of raising, so a
    caller probing bad parameters sees all problems at once.
    """
    violations = []
    seam_jumps = {}

    if not spec.w < spec.a:
        violations.append("w < a")
    if spec.curvature <= 0:
        violations.append("curvature at minimum must be positive")

    rgrid = np.arange(0.0, 2.0 * spec.b + grid_step, grid_step)
    vals = eval_potential(spec, rgrid)

    if np.min(vals) < -spec.k * (1.0 + 1e-12):
        violations.append("potential drops below -k")
    imin = int(np.argmin(vals))
    if abs(rgrid[imin] - spec.a) > 2.0 * grid_step:
        violations.append("global minimum not at r = a")
    near_min = vals <= -spec.k * (1.0 - 1e-9)
    if np.any(near_min & (np.abs(rgrid - spec.a) > 2.0 * grid_step)):
        violations.append("minimum at r = a is not unique")

    beyond = rgrid >= spec.b
    if np.any(vals[beyond] != 0.0):
        violations.append("potential does not vanish beyond the range b")

    # curvature from Richardson-extrapolated central differences at r = a
    def fd_second(h):
        return (eval_potential(spec, spec.a + h) - 2.0 * eval_potential(spec, spec.a)
                + eval_potential(spec, spec.a - h)) / h**2

    c_fd = (4.0 * fd_second(5e-5) - fd_second(1e-4)) / 3.0
    if abs(c_fd - spec.curvature) > 1e-5 * spec.curvature:
        violations.append("finite-difference curvature disagrees with 8k/w^2")

    # seam smoothness: one-sided estimates from both sides of each seam
    u = lambda r: eval_potential(spec, r)
    h3 = 1e-4 * (spec.w / 0.3)
    tol3 = 1e-3 * spec.k / spec.w**3
    seams = [("outer", spec.a + spec.w)]
    if spec.a - spec.w > 0:
        seams.insert(0, ("inner", spec.a - spec.w))
    for name, seam in seams:
        jump_val = abs(u(seam + 1e-9) - u(seam - 1e-9))
        jump_third = abs(_one_sided_third(u, seam, h3, +1) - _one_sided_third(u, seam, h3, -1))
        seam_jumps[name] = {"value": jump_val, "third": jump_third}
        if jump_val > 1e-9 * spec.k:
            violations.append(f"value jump at {name} seam")
        if jump_third > tol3:
            violations.append(f"third-derivative jump at {name} seam")

    return PotentialReport(ok=not violations, violations=violations, seam_jumps=seam_jumps)
