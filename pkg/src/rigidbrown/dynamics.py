"""Overdamped Langevin integration of the particle system with shape monitoring.

The microscopic equation

    dx_i = -(beta/2) grad_i H(x) dt + dw_i

is integrated by Euler steps on the microscopic clock; the macroscopic time
change t_macro = epsilon^kappa t_micro (kappa = dim + 2) is applied in the
bookkeeping only, which is equivalent in law and avoids a stiff drift.  At
every record time the configuration is decomposed against the reference
crystal, energies are evaluated, and the first time the edge-wise fluctuation
exceeds the cap is reported as the exit time sigma.

Gaussian increments come from counter-based Philox streams keyed by
(seed, path, particle), so adding particles or paths never reshuffles the
noise of existing ones.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .crystal import Crystal
from .errors import (CoincidentPointsError, IntegrationFailureError,
                     ScheduleUndefinedError)
from .fit import fit_isometry
from .potential import PotentialSpec, eval_derivative, eval_potential
from .rigidity import RigidityReport

STABILITY_LIMIT = 0.1      # dt * beta * curvature must stay below this
MAX_CHUNK_STEPS = 65536    # bound on the pregenerated-noise buffer


@dataclass
class SdeConfig:
    """Integration parameters for one ensemble of paths."""

    epsilon: float
    beta: float
    dim: int
    t_final: float                 # macroscopic horizon
    record_every: float            # macroscopic sampling interval
    cap_c: float                   # edge-sup fluctuation cap
    seed: int
    dt_micro: float | None = None  # None: largest step allowed by the guard
    no_noise: bool = False

    @property
    def kappa(self) -> int:
        return self.dim + 2

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.beta <= 0 or self.t_final <= 0 or self.record_every <= 0:
            raise ValueError("beta, t_final and record_every must be positive")
        if self.record_every > self.t_final:
            raise ValueError("record_every cannot exceed t_final")
        if self.cap_c <= 0:
            raise ValueError("fluctuation cap must be positive")
        if not (0 <= int(self.seed) < 2**63):
            raise ValueError("seed must be a nonnegative 64-bit integer")


def stability_dt(spec: PotentialSpec, beta: float) -> float:
    """Largest microscopic step satisfying dt * beta * curvature <= 0.1."""
    return STABILITY_LIMIT / (beta * spec.curvature)


def resolve_steps(cfg: SdeConfig, spec: PotentialSpec):
    """(steps_per_record, dt): dt divides the record interval exactly and
    respects the stability guard; an explicit cfg.dt_micro is validated and
    rounded down onto the record grid."""
    record_micro = cfg.epsilon ** -cfg.kappa * cfg.record_every
    dt_max = stability_dt(spec, cfg.beta)
    if cfg.dt_micro is not None:
        if cfg.dt_micro * cfg.beta * spec.curvature > STABILITY_LIMIT * (1 + 1e-12):
            raise ValueError(
                f"dt_micro={cfg.dt_micro:.3g} violates the stability guard "
                f"dt * beta * curvature <= {STABILITY_LIMIT}")
        dt_max = min(dt_max, cfg.dt_micro)
    steps = max(1, int(np.ceil(record_micro / dt_max - 1e-12)))
    return steps, record_micro / steps


@dataclass
class PathRecord:
    """Time series of one path sampled at the macroscopic record times."""

    times: np.ndarray          # (K+1,) macroscopic
    com: np.ndarray            # (K+1, d) center of mass
    rotations: np.ndarray      # (K+1, d, d) fitted rotations
    disp_inf: np.ndarray       # (K+1,)
    disp_edge_inf: np.ndarray  # (K+1,)
    energy: np.ndarray         # (K+1,) H relative to the crystal
    force_sq: np.ndarray       # (K+1,) squared gradient norm of H
    bw_mean: np.ndarray        # (K+1, d) running mean of injected increments
    sigma: float | None        # first record time outside the tube, None if survived
    offgraph_events: int       # (step, pair) counts of non-neighbors entering range
    seed: int
    path_index: int
    backend: str
    dt_micro: float
    steps_per_record: int
    meta: dict = field(default_factory=dict)

    @property
    def survived(self) -> bool:
        return self.sigma is None


def _particle_rng(seed: int, path_index: int, particle: int) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed), int(path_index), int(particle)])
    return np.random.Generator(np.random.Philox(key))


def _in_range_pairs(x: np.ndarray, range_b: float):
    """(ii, jj, dist) for all pairs with |x_i - x_j| < range_b.

    All-pairs for moderate sizes; beyond that, cell buckets of side range_b
    limit the candidate pairs to neighboring cells.
    """
    n = len(x)
    if n <= 512:
        ii, jj = np.triu_indices(n, k=1)
    else:
        cells = np.floor(x / range_b).astype(np.int64)
        buckets: dict = {}
        for idx, key in enumerate(map(tuple, cells)):
            buckets.setdefault(key, []).append(idx)
        d = x.shape[1]
        offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * d))).T.reshape(-1, d)
        ii_list, jj_list = [], []
        for key, members in buckets.items():
            for off in offsets:
                other = tuple(np.asarray(key) + off)
                if other < key:
                    continue
                cand = buckets.get(other)
                if cand is None:
                    continue
                if other == key:
                    for ai, a in enumerate(members):
                        for b in members[ai + 1:]:
                            ii_list.append(min(a, b))
                            jj_list.append(max(a, b))
                else:
                    for a in members:
                        for b in cand:
                            ii_list.append(min(a, b))
                            jj_list.append(max(a, b))
        ii = np.asarray(ii_list, dtype=np.intp)
        jj = np.asarray(jj_list, dtype=np.intp)
    dist = np.linalg.norm(x[ii] - x[jj], axis=1)
    mask = dist < range_b
    return ii[mask], jj[mask], dist[mask]


def total_force(x: np.ndarray, spec: PotentialSpec) -> np.ndarray:
    """Negative energy gradient: sum of pair forces over all pairs in range.

    The per-pair contributions enter antisymmetrically, so the force blocks
    sum to zero up to rounding.
    """
    x = np.asarray(x, dtype=float)
    ii, jj, dist = _in_range_pairs(x, spec.b)
    if np.any(dist == 0.0):
        raise CoincidentPointsError("coincident particles inside the interaction range")
    force = np.zeros_like(x)
    if len(ii):
        du = eval_derivative(spec, dist)
        contrib = (-du / dist)[:, None] * (x[ii] - x[jj])
        np.add.at(force, ii, contrib)
        np.subtract.at(force, jj, contrib)
    return force


def energy(x: np.ndarray, c: Crystal, spec: PotentialSpec):
    """(H(x) - H(z), |grad H(x)|^2) with the crystal as energy reference.

    The difference is accumulated pair by pair (U(r) + k on reference edges),
    which avoids cancellation between large totals.
    """
    x = np.asarray(x, dtype=float)
    ii, jj, dist = _in_range_pairs(x, spec.b)
    h_rel = float(np.sum(eval_potential(spec, dist)))
    h_rel += spec.k * len(c.edges)
    g = float(np.sum(total_force(x, spec) ** 2))
    return h_rel, g


def cooling_schedule(epsilon: float, c: Crystal, report: RigidityReport,
                     nu: float | None = None, cap: float | None = None,
                     p: float = 2.0, margin: float = 10.0) -> float:
    """Inverse temperature that beats the shape-preservation bound by `margin`.

    The bound is (edge_gap * cap^2 / N)^(p/(p-1)) * spectral_gap *
    epsilon^(kappa/(p-1)) with cap = epsilon^nu; the returned beta is margin
    divided by it, so doubling the margin doubles beta.
    """
    if not report.rigid or not np.isfinite(report.edge_gap) or report.edge_gap <= 0:
        raise ScheduleUndefinedError(
            "cooling schedule requires an infinitesimally rigid crystal")
    if p <= 1:
        raise ValueError("schedule exponent p must exceed 1")
    if cap is None:
        if nu is None:
            raise ValueError("provide the fluctuation cap or its exponent nu")
        cap = epsilon ** nu
    kappa = c.dim + 2
    q = p / (p - 1.0)
    bound = (report.edge_gap * cap**2 / c.n_particles) ** q \
        * report.spectral_gap * epsilon ** (kappa / (p - 1.0))
    return margin / bound


def simulate_path(c: Crystal, spec: PotentialSpec, cfg: SdeConfig,
                  path_index: int = 0, backend: str | None = None) -> PathRecord:
    """Integrate one path from x(0) = z and decompose it at the record times.

    The path is always carried to the horizon; leaving the tube only sets
    sigma (at record resolution).  Blow-up raises IntegrationFailureError
    carrying the partial record.
    """
    if c.dim != cfg.dim:
        raise ValueError("config dimension does not match the crystal")
    kernels = _kernels.available_backends()
    name = backend or _kernels.BACKEND
    if name not in kernels:
        raise ValueError(f"backend {name!r} not available (have {sorted(kernels)})")
    kernel = kernels[name]

    n, d = c.positions.shape
    steps_per_record, dt = resolve_steps(cfg, spec)
    n_records = max(1, int(round(cfg.t_final / cfg.record_every)))
    times = cfg.record_every * np.arange(n_records + 1)
    sqrt_dt = np.sqrt(dt)
    drift_coef = 0.5 * cfg.beta * dt
    adjacency = c.adjacency().astype(np.uint8)

    x = c.positions.copy()
    gens = None if cfg.no_noise else [
        _particle_rng(cfg.seed, path_index, i) for i in range(n)]

    rec = PathRecord(
        times=times,
        com=np.zeros((n_records + 1, d)),
        rotations=np.zeros((n_records + 1, d, d)),
        disp_inf=np.zeros(n_records + 1),
        disp_edge_inf=np.zeros(n_records + 1),
        energy=np.zeros(n_records + 1),
        force_sq=np.zeros(n_records + 1),
        bw_mean=np.zeros((n_records + 1, d)),
        sigma=None,
        offgraph_events=0,
        seed=int(cfg.seed),
        path_index=int(path_index),
        backend=name,
        dt_micro=dt,
        steps_per_record=steps_per_record,
    )

    bw_accum = np.zeros(d)

    def record(k):
        dec = fit_isometry(x, c)
        rec.com[k] = dec.translation
        rec.rotations[k] = dec.rotation
        rec.disp_inf[k] = dec.disp_inf
        rec.disp_edge_inf[k] = dec.disp_edge_inf
        rec.energy[k], rec.force_sq[k] = energy(x, c, spec)
        rec.bw_mean[k] = bw_accum
        if rec.sigma is None and dec.disp_edge_inf > cfg.cap_c:
            rec.sigma = float(times[k])

    record(0)
    for k in range(1, n_records + 1):
        remaining = steps_per_record
        while remaining > 0:
            chunk = min(remaining, MAX_CHUNK_STEPS)
            if cfg.no_noise:
                noise = np.zeros((chunk, n, d))
            else:
                noise = np.empty((chunk, n, d))
                for i, g in enumerate(gens):
                    noise[:, i, :] = g.standard_normal((chunk, d))
                bw_accum = bw_accum + sqrt_dt * noise.sum(axis=0).mean(axis=0)
            status, bad_step, offgraph = kernel.integrate_chunk(
                x, noise, drift_coef, sqrt_dt, spec.a, spec.w, spec.k, spec.b,
                adjacency)
            rec.offgraph_events += int(offgraph)
            if status != 0:
                raise IntegrationFailureError(
                    f"non-finite or exploding coordinates at record {k}, "
                    f"step {bad_step}", partial_record=rec)
            remaining -= chunk
        record(k)
    return rec


def simulate_ensemble(c: Crystal, spec: PotentialSpec, cfg: SdeConfig,
                      n_paths: int, backend: str | None = None) -> list:
    """Independent paths 0..n_paths-1 under per-path noise substreams."""
    return [simulate_path(c, spec, cfg, path_index=p, backend=backend)
            for p in range(n_paths)]
