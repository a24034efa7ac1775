"""Experiment pipelines: build, certify, simulate, analyze, export.

Each stage writes its artifacts as soon as it completes, so a failure later in
a `full` run preserves everything already produced.  All artifacts are
deterministic functions of the resolved configuration and the master seed.
"""

import os
import sys

import numpy as np

from . import __version__, _kernels
from .config import load_config, validate_config
from .crystal import (Crystal, crystal_from_json, lattice_patch, octahedron,
                      simplex_cell)
from .dynamics import SdeConfig, cooling_schedule, resolve_steps, simulate_ensemble
from .errors import ConfigError
from .io import (config_hash, load_run, path_csv_name, write_json,
                 write_path_csv, write_table_csv)
from .limits import crystal_moments, law_comparison, rotation_bm_ensemble
from .potential import PotentialSpec, validate_assumption
from .rigidity import rigidity_report

PIPELINES = ("rigidity", "simulate", "analyze", "refbm", "full")


def build_potential(resolved: dict) -> PotentialSpec:
    pot = resolved["potential"]
    return PotentialSpec(a=pot["a"], w=pot["w"], k=pot["k"])


def build_crystal(resolved: dict, config_dir: str = ".") -> Crystal:
    spec = build_potential(resolved)
    cry = resolved["crystal"]
    kind = cry["kind"]
    if kind == "lattice_patch":
        return lattice_patch(spec, cry["dim"], cry["domain"], cry["epsilon"])
    if kind == "simplex":
        return simplex_cell(cry.get("n") or cry["dim"], cry["dim"], spec.a,
                            range_b=spec.b)
    if kind == "octahedron":
        return octahedron(spec.a, range_b=spec.b)
    if kind == "file":
        path = cry["path"]
        if not os.path.isabs(path):
            path = os.path.join(config_dir, path)
        with open(path) as f:
            return crystal_from_json(f.read(), range_b=spec.b)
    raise ConfigError([f"crystal.kind: unknown kind {kind!r}"])


def resolve_temperature(resolved: dict, c: Crystal, report) -> tuple:
    """(beta, cap_c) with the cooling schedule applied when requested."""
    dyn = resolved["dynamics"]
    eps = resolved["crystal"]["epsilon"]
    cap = dyn["cap_c"] if dyn["cap_c"] is not None else eps ** dyn["nu"]
    if dyn["beta"] is not None:
        return float(dyn["beta"]), float(cap)
    cooling = dyn["cooling"]
    beta = cooling_schedule(eps, c, report, cap=cap,
                            p=cooling["p"], margin=cooling["margin"])
    return float(beta), float(cap)


def stage_rigidity(resolved: dict, out_dir: str, config_dir: str = "."):
    """Certify the configured crystal; writes crystal.json + rigidity_report.json."""
    os.makedirs(out_dir, exist_ok=True)
    spec = build_potential(resolved)
    c = build_crystal(resolved, config_dir)
    report = rigidity_report(c, spec.curvature)
    h = config_hash(resolved)
    with open(os.path.join(out_dir, "crystal.json"), "w") as f:
        f.write(c.to_json() + "\n")
    pot_report = validate_assumption(spec)
    write_json(os.path.join(out_dir, "rigidity_report.json"), {
        "schema_version": 1,
        "config_hash": h,
        "crystal": {
            "dim": c.dim,
            "n_particles": c.n_particles,
            "n_edges": int(len(c.edges)),
            "graph_radius": c.graph_radius,
            "spacing": c.spacing,
        },
        "potential_checks": {
            "ok": pot_report.ok,
            "violations": pot_report.violations,
        },
        "report": report.summary(max_eigenvalues=50),
    })
    return spec, c, report


def stage_simulate(resolved: dict, out_dir: str, spec, c, report,
                   backend: str | None = None):
    """Run the configured ensemble; writes path CSVs and the summary."""
    os.makedirs(os.path.join(out_dir, "paths"), exist_ok=True)
    dyn = resolved["dynamics"]
    eps = resolved["crystal"]["epsilon"]
    beta, cap = resolve_temperature(resolved, c, report)
    cfg = SdeConfig(epsilon=eps, beta=beta, dim=c.dim, t_final=dyn["t_final"],
                    record_every=dyn["record_every"], cap_c=cap,
                    seed=dyn["seed"], dt_micro=dyn["dt_micro"],
                    no_noise=dyn["no_noise"])
    steps_per_record, dt = resolve_steps(cfg, spec)
    if not report.rigid:
        print("warning: simulating a crystal that is not infinitesimally rigid",
              file=sys.stderr)

    h = config_hash(resolved)
    write_json(os.path.join(out_dir, "resolved_config.json"), resolved)

    records = simulate_ensemble(c, spec, cfg, dyn["paths"], backend=backend)
    for rec in records:
        write_path_csv(os.path.join(out_dir, "paths", path_csv_name(rec.path_index)),
                       rec, h)
    survived = sum(1 for r in records if r.survived)
    write_json(os.path.join(out_dir, "ensemble_summary.json"), {
        "schema_version": 1,
        "config_hash": h,
        "backend": records[0].backend,
        "epsilon": eps,
        "beta": beta,
        "cap_c": cap,
        "dt_micro": dt,
        "steps_per_record": steps_per_record,
        "t_final": dyn["t_final"],
        "record_every": dyn["record_every"],
        "n_paths": dyn["paths"],
        "seed": dyn["seed"],
        "survived": survived,
        "survival_fraction": survived / dyn["paths"],
        "sigmas": [r.sigma for r in records],
        "offgraph_events": [r.offgraph_events for r in records],
        "rng": {"bit_generator": "Philox",
                "scheme": "seed_sequence([seed, path, particle])"},
        "versions": {"rigidbrown": __version__, "numpy": np.__version__},
        "config": resolved,
    })
    return records


def stage_analyze(run_dirs: list, out_dir: str) -> dict:
    """Ensemble statistics for one or more simulate outputs -> statistics.json."""
    os.makedirs(out_dir, exist_ok=True)
    ensembles = []
    for index, run_dir in enumerate(run_dirs):
        records, summary = load_run(run_dir)
        resolved = summary["config"]
        spec = build_potential(resolved)
        with open(os.path.join(run_dir, "crystal.json")) as f:
            c = crystal_from_json(f.read(), range_b=spec.b)
        eps = summary["epsilon"]
        body = crystal_moments(c, eps)
        tolerances = resolved["analysis"]["tolerances"]
        law = law_comparison(records, c, body, eps,
                             min_surviving=tolerances["min_surviving"])
        ensembles.append({
            "ensemble_index": index,
            "config_hash": summary["config_hash"],
            "epsilon": eps,
            "beta": summary["beta"],
            "cap_c": summary["cap_c"],
            "n_paths": summary["n_paths"],
            "survived": summary["survived"],
            "survival_fraction": summary["survival_fraction"],
            "qv_tolerance": tolerances["qv_rel"],
            "law": law,
        })
    stats = {"schema_version": 1, "ensembles": ensembles}
    write_json(os.path.join(out_dir, "statistics.json"), stats)
    return stats


def stage_refbm(resolved: dict, out_dir: str, c: Crystal,
                n_paths: int | None = None) -> dict:
    """Reference rotation Brownian motion driven by the crystal's body moments."""
    os.makedirs(out_dir, exist_ok=True)
    dyn = resolved["dynamics"]
    eps = resolved["crystal"]["epsilon"]
    body = crystal_moments(c, eps)
    n_paths = n_paths or dyn["paths"]
    times, thetas = rotation_bm_ensemble(body, t_final=dyn["t_final"],
                                         dt=dyn["record_every"],
                                         n_paths=n_paths, seed=dyn["seed"])
    h = config_hash(resolved)
    d = body.dim
    header = ["path", "time"] + [f"rot_{a}{b}" for a in range(d) for b in range(d)]
    rows = []
    for p in range(n_paths):
        for k in range(len(times)):
            rows.append([p, float(times[k])] + [float(v) for v in thetas[p, k].ravel()])
    write_table_csv(os.path.join(out_dir, "reference_rotation_paths.csv"),
                    header, rows, cfg_hash=h)
    summary = {
        "schema_version": 1,
        "config_hash": h,
        "epsilon": eps,
        "rho_bar": body.rho_bar,
        "qbar_alpha": [float(v) for v in body.qbar_alpha],
        "n_paths": n_paths,
        "dt": dyn["record_every"],
        "t_final": dyn["t_final"],
        "seed": dyn["seed"],
    }
    write_json(os.path.join(out_dir, "refbm_summary.json"), summary)
    return summary


PLOT_HEADERS = {
    "variance_vs_t.csv": ["epsilon", "beta", "time", "coord",
                          "observed_var", "predicted_var"],
    "qv_rate_vs_epsilon.csv": ["epsilon", "beta", "plane", "rate",
                               "finite_n_prediction", "asymptotic_prediction",
                               "rel_dev_finite_n"],
    "survival_vs_beta.csv": ["epsilon", "beta", "n_paths", "survived",
                             "survival_fraction"],
}


def emit_plot_data(stats: dict, out_dir: str) -> dict:
    """Flatten a statistics report into plot-ready CSV tables.

    Ensembles missing a section are skipped for that table with a warning;
    an empty report produces header-only tables.
    """
    os.makedirs(out_dir, exist_ok=True)
    ensembles = stats.get("ensembles", [])
    if not ensembles:
        print("warning: statistics report contains no ensembles", file=sys.stderr)

    tables = {name: [] for name in PLOT_HEADERS}
    for ens in ensembles:
        eps, beta = ens.get("epsilon"), ens.get("beta")
        law = ens.get("law", {})
        trans = law.get("translational")
        if trans:
            times = trans["times"]
            obs = np.asarray(trans["observed_var"])
            pred = trans["predicted_var"]
            for k, t in enumerate(times):
                for coord in range(obs.shape[1]):
                    tables["variance_vs_t.csv"].append(
                        [eps, beta, t, coord, float(obs[k, coord]), pred[k]])
        else:
            print(f"warning: ensemble {ens.get('ensemble_index')} lacks the "
                  "translational section", file=sys.stderr)
        rot = law.get("rotational")
        if rot:
            for plane, entry in sorted(rot.items()):
                tables["qv_rate_vs_epsilon.csv"].append(
                    [eps, beta, plane, entry["rate"],
                     entry["finite_n_prediction"], entry["asymptotic_prediction"],
                     entry["rel_dev_finite_n"]])
        else:
            print(f"warning: ensemble {ens.get('ensemble_index')} lacks the "
                  "rotational section", file=sys.stderr)
        tables["survival_vs_beta.csv"].append(
            [eps, beta, ens.get("n_paths"), ens.get("survived"),
             ens.get("survival_fraction")])

    paths = {}
    for name, header in PLOT_HEADERS.items():
        path = os.path.join(out_dir, name)
        write_table_csv(path, header, tables[name])
        paths[name] = path
    return paths


def run_experiment(config_path: str, pipeline: str, out_dir: str,
                   seed: int | None = None, paths: int | None = None,
                   backend: str | None = None) -> dict:
    """Execute one named pipeline; returns the artifact index.

    CLI overrides for the seed and the ensemble size are applied before
    resolution so the echoed configuration reflects what actually ran.
    """
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}; choose from {PIPELINES}")
    resolved = load_config(config_path)
    if seed is not None:
        resolved["dynamics"]["seed"] = int(seed)
    if paths is not None:
        resolved["dynamics"]["paths"] = int(paths)
    resolved = validate_config(resolved)
    config_dir = os.path.dirname(os.path.abspath(config_path))

    artifacts = {"out_dir": out_dir, "config_hash": config_hash(resolved),
                 "backend": backend or _kernels.BACKEND}
    spec, c, report = stage_rigidity(resolved, out_dir, config_dir)
    artifacts["rigidity_report"] = os.path.join(out_dir, "rigidity_report.json")
    if pipeline == "rigidity":
        return artifacts

    if pipeline == "refbm":
        stage_refbm(resolved, out_dir, c)
        artifacts["refbm_summary"] = os.path.join(out_dir, "refbm_summary.json")
        return artifacts

    if pipeline in ("simulate", "full"):
        stage_simulate(resolved, out_dir, spec, c, report, backend=backend)
        artifacts["ensemble_summary"] = os.path.join(out_dir, "ensemble_summary.json")
    if pipeline == "simulate":
        return artifacts

    if pipeline in ("analyze", "full"):
        stats = stage_analyze([out_dir], out_dir)
        artifacts["statistics"] = os.path.join(out_dir, "statistics.json")
        if pipeline == "full":
            emit_plot_data(stats, os.path.join(out_dir, "plots"))
            artifacts["plots"] = os.path.join(out_dir, "plots")
    return artifacts
