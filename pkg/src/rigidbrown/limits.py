"""Macroscopic body data, rotational increments, and law comparisons.

After the spatial rescaling x -> epsilon x the crystal defines a body with
total mass rho_bar = epsilon^d N and second-moment matrix qbar =
epsilon^(d+2) sum_i z_i z_i^T.  The limiting motion of that body is a
Brownian translation with variance 1/rho_bar per unit time and a left
Brownian motion on SO(d) whose (a, b) plane diffuses at rate
1/(qbar_a + qbar_b).  This module computes the body data, extracts the
accumulated rotation increments from sampled paths, simulates the reference
rotation Brownian motion, and compares ensemble statistics against both the
finite-size and the limiting predictions.
"""

from dataclasses import dataclass, field

import numpy as np

from .crystal import Crystal
from .errors import DegenerateDiffusionError, InsufficientDataError
from .fit import rotation_gradient
from .rotations import skew_pairs, so_exp_batch, so_log


@dataclass
class MacroscopicBody:
    """Mass and second moments of the rescaled crystal."""

    rho_bar: float
    qbar: np.ndarray           # (d, d) symmetric PSD
    qbar_alpha: np.ndarray     # (d,) diagonal moments after rotation
    diag_rotation: np.ndarray  # (d, d) in SO(d): diag_rotation^T qbar diag_rotation diagonal
    epsilon: float

    @property
    def dim(self) -> int:
        return self.qbar.shape[0]


def crystal_moments(c: Crystal, epsilon: float) -> MacroscopicBody:
    """Body data of the crystal at scale epsilon (kappa = d + 2 weighting)."""
    if not c.centered:
        raise ValueError("crystal moments are defined for centered crystals")
    d = c.dim
    kappa = d + 2
    rho_bar = epsilon**d * c.n_particles
    qbar = epsilon**kappa * (c.positions.T @ c.positions)
    vals, vecs = np.linalg.eigh(qbar)
    if np.linalg.det(vecs) < 0:
        vecs[:, -1] = -vecs[:, -1]
    return MacroscopicBody(rho_bar=float(rho_bar), qbar=qbar,
                           qbar_alpha=vals.copy(), diag_rotation=vecs,
                           epsilon=epsilon)


@dataclass
class DensityGrid:
    """Rescaled empirical measure binned on a regular grid."""

    edges: list                # per-dimension bin edges of the macroscopic grid
    mass: np.ndarray           # (m, ..., m) mass per cell (epsilon^d per point)
    overflow_mass: float
    cell_volume: float

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum() + self.overflow_mass)

    @property
    def density(self) -> np.ndarray:
        return self.mass / self.cell_volume


def empirical_measure(x: np.ndarray, epsilon: float, grid: dict | None = None) -> DensityGrid:
    """Bin epsilon * x_i with mass epsilon^d each; off-grid points go to an
    overflow bucket so the total mass is epsilon^d N exactly."""
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    scaled = epsilon * x
    grid = dict(grid or {})
    m = int(grid.get("cells_per_dim", 64))
    margin = float(grid.get("margin", 0.1))
    if "lo" in grid and "hi" in grid:
        lo = np.asarray(grid["lo"], dtype=float)
        hi = np.asarray(grid["hi"], dtype=float)
    else:
        lo = scaled.min(axis=0)
        hi = scaled.max(axis=0)
        pad = margin * np.maximum(hi - lo, 1e-12)
        lo, hi = lo - pad, hi + pad
    counts, edges = np.histogramdd(scaled, bins=m, range=list(zip(lo, hi)))
    inside = int(counts.sum())
    cell_volume = float(np.prod((hi - lo) / m))
    return DensityGrid(edges=list(edges), mass=counts * epsilon**d,
                       overflow_mass=(n - inside) * epsilon**d,
                       cell_volume=cell_volume)


@dataclass
class AngularPath:
    """Accumulated rotation-log increments of a sampled rotation path."""

    times: np.ndarray        # (K+1,)
    cumulative: np.ndarray   # (K+1, d, d) skew matrices, zero at the start
    increments: np.ndarray   # (K, d, d)
    qv: dict = field(default_factory=dict)  # (a, b) -> sum of squared increments


def extract_angular_path(times: np.ndarray, rotations: np.ndarray,
                         first_order: bool = False) -> AngularPath:
    """Accumulate principal logarithms of consecutive rotation ratios.

    With `first_order` the increment is the skew part of r_k^T r_{k+1} - I
    instead of the exact logarithm (useful as a cross-check; the two agree to
    second order in the step).  Raises UndersampledPathError when a ratio is
    too far from the identity for a principal logarithm.
    """
    rotations = np.asarray(rotations, dtype=float)
    k1, d, _ = rotations.shape
    increments = np.zeros((k1 - 1, d, d))
    for k in range(k1 - 1):
        ratio = rotations[k].T @ rotations[k + 1]
        if first_order:
            increments[k] = 0.5 * (ratio - ratio.T)
        else:
            increments[k] = so_log(ratio)
    cumulative = np.zeros((k1, d, d))
    np.cumsum(increments, axis=0, out=cumulative[1:])
    qv = {(a, b): float(np.sum(increments[:, a, b] ** 2)) for a, b in skew_pairs(d)}
    return AngularPath(times=np.asarray(times, dtype=float),
                       cumulative=cumulative, increments=increments, qv=qv)


def angular_qv_rates(c: Crystal) -> dict:
    """Finite-size quadratic-variation rates of the rotation log at the
    crystal, per microscopic unit time: for each plane (a, b) the sum over
    particles and coordinates of the squared rotation-derivative component.

    For d = 2 this equals 1 / sum_i |z_i|^2; the macroscopic-time rate is the
    epsilon^-kappa multiple.
    """
    grad = rotation_gradient(c.positions, c)
    return {(a, b): float(np.sum(grad[:, :, a, b] ** 2))
            for a, b in skew_pairs(c.dim)}


def rotation_bm_ensemble(body: MacroscopicBody, t_final: float, dt: float,
                         n_paths: int, seed: int):
    """Sample paths of the rotation Brownian motion driven by the body moments.

    Increments of the (a, b) plane are independent N(0, dt/(qbar_a + qbar_b));
    each step multiplies by the exact exponential of the skew increment, which
    keeps every sample exactly orthogonal and is a consistent Stratonovich
    discretization.  Returns (times, rotations[n_paths, K+1, d, d]).
    """
    d = body.dim
    pairs = skew_pairs(d)
    rates = np.array([1.0 / (body.qbar_alpha[a] + body.qbar_alpha[b])
                      if body.qbar_alpha[a] + body.qbar_alpha[b] > 0 else np.nan
                      for a, b in pairs])
    if np.any(~np.isfinite(rates)):
        raise DegenerateDiffusionError(
            "a pair of moments sums to zero; the rotation diffusion is degenerate")
    n_steps = max(1, int(round(t_final / dt)))
    dt = t_final / n_steps
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed)])))
    thetas = np.zeros((n_paths, n_steps + 1, d, d))
    thetas[:, 0] = np.eye(d)
    scale = np.sqrt(dt * rates)
    skew = np.zeros((n_paths, d, d))
    for k in range(n_steps):
        draws = rng.standard_normal((n_paths, len(pairs))) * scale
        for idx, (a, b) in enumerate(pairs):
            skew[:, a, b] = draws[:, idx]
            skew[:, b, a] = -draws[:, idx]
        thetas[:, k + 1] = thetas[:, k] @ so_exp_batch(skew)
    times = dt * np.arange(n_steps + 1)
    return times, thetas


def _variance_band(sample_var: float, predicted: float, n: int) -> dict:
    """Chi-square 3-sigma band for a sample variance against its prediction."""
    rel = 3.0 * np.sqrt(2.0 / max(n - 1, 1))
    return {
        "observed": float(sample_var),
        "predicted": float(predicted),
        "band_3sigma": [float(predicted * (1 - rel)), float(predicted * (1 + rel))],
        "within": bool(abs(sample_var - predicted) <= rel * predicted),
    }


def law_comparison(records: list, c: Crystal, body: MacroscopicBody,
                   epsilon: float, min_surviving: int = 30) -> dict:
    """Ensemble statistics of translation and rotation against predictions.

    Censors paths that left the tube before the horizon (they are counted but
    excluded, since their decompositions are unreliable), then reports

    * per-coordinate variance of the scaled center of mass against the exact
      epsilon^(2-kappa) t / N law, at the final time and along the whole grid,
    * quadratic-variation rates of the rotation-log planes against the
      finite-size derivative sum and the limiting 1/(qbar_a + qbar_b),
    * sample correlations between translation and rotation increments, whose
      3/sqrt(n) bound is the independence check,
    * the range of the gradient-square to energy ratio over all records.
    """
    d = c.dim
    kappa = d + 2
    n_all = len(records)
    surviving = [r for r in records if r.survived]
    if len(surviving) < min_surviving:
        raise InsufficientDataError(
            f"only {len(surviving)} of {n_all} paths survived; "
            f"need at least {min_surviving}")

    times = surviving[0].times
    for r in surviving[1:]:
        if not np.array_equal(r.times, times):
            raise ValueError("paths in an ensemble must share the record grid")
    m = len(surviving)
    n_particles = c.n_particles

    # translation: Var(eps * com_alpha(t)) = eps^(2-kappa) t / N exactly in law
    com = np.stack([r.com for r in surviving])          # (m, K+1, d)
    scaled = epsilon * com
    var_t = np.var(scaled, axis=0, ddof=1)              # (K+1, d)
    predicted_t = epsilon ** (2 - kappa) * times / n_particles
    final = {f"coord_{a}": _variance_band(var_t[-1, a], predicted_t[-1], m)
             for a in range(d)}

    # rotation: pooled quadratic variation per plane
    angular = [extract_angular_path(times, r.rotations) for r in surviving]
    t_span = float(times[-1] - times[0])
    pairs = skew_pairs(d)
    micro_rates = angular_qv_rates(c)
    qv_section = {}
    increments = {}
    for a, b in pairs:
        pooled = float(sum(path.qv[(a, b)] for path in angular))
        n_inc = m * (len(times) - 1)
        rate = pooled / (m * t_span)
        finite_n = epsilon ** -kappa * micro_rates[(a, b)]
        asymptotic = 1.0 / (body.qbar_alpha[a] + body.qbar_alpha[b])
        rel_band = 3.0 * np.sqrt(2.0 / n_inc)
        qv_section[f"plane_{a}{b}"] = {
            "rate": rate,
            "finite_n_prediction": float(finite_n),
            "asymptotic_prediction": float(asymptotic),
            "rel_dev_finite_n": float(rate / finite_n - 1.0),
            "band_3sigma_rel": float(rel_band),
            "n_increments": int(n_inc),
        }
        increments[(a, b)] = np.concatenate(
            [path.increments[:, a, b] for path in angular])

    # independence: correlation of pooled increments
    dcom = np.diff(scaled, axis=1)                      # (m, K, d)
    n_inc = dcom.shape[0] * dcom.shape[1]
    bound = 3.0 / np.sqrt(n_inc)
    indep = {"bound": float(bound), "n_increments": int(n_inc)}
    for a, b in pairs:
        dm = increments[(a, b)]
        for alpha in range(d):
            series = dcom[:, :, alpha].ravel()
            corr = float(np.corrcoef(series, dm)[0, 1])
            indep[f"corr_com{alpha}_plane{a}{b}"] = corr
    indep["max_abs_corr"] = float(max(
        abs(v) for k, v in indep.items() if k.startswith("corr")))
    indep["within"] = bool(indep["max_abs_corr"] <= bound)

    # energy sandwich material: ratio of gradient square to energy, t > 0
    ratios = []
    for r in surviving:
        with np.errstate(divide="ignore", invalid="ignore"):
            rr = r.force_sq[1:] / r.energy[1:]
        ratios.append(rr[np.isfinite(rr)])
    ratios = np.concatenate(ratios)

    com_dev = max(float(np.abs((r.com - r.com[0]) - r.bw_mean).max())
                  for r in surviving)

    return {
        "n_paths": n_all,
        "n_surviving": m,
        "n_censored": n_all - m,
        "survival_fraction": m / n_all,
        "translational": {
            "times": times.tolist(),
            "predicted_var": predicted_t.tolist(),
            "observed_var": var_t.tolist(),
            "final": final,
        },
        "rotational": qv_section,
        "independence": indep,
        "energy_ratio": {
            "min": float(ratios.min()) if len(ratios) else None,
            "max": float(ratios.max()) if len(ratios) else None,
            "count": int(len(ratios)),
        },
        "com_identity_max_dev": com_dev,
    }
