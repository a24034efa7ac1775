"""Experiment configuration: strict JSON schema with materialized defaults.

Unknown keys are rejected everywhere so typos fail loudly, and cross-field
constraints (well shape, lattice range condition, step-size guard) are checked
up front.  Validation collects every problem before failing.
"""

import copy
import json

from .crystal import lattice_constant
from .errors import ConfigError

SCHEMA_VERSION = 1

_DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "potential": {"a": 1.0, "w": 0.3, "k": 1.0},
    "crystal": {},   # no defaults: dim/kind/epsilon are required
    "dynamics": {
        "beta": None,
        "cooling": None,
        "nu": None,
        "cap_c": None,
        "dt_micro": None,
        "t_final": None,
        "record_every": None,
        "paths": 100,
        "seed": 0,
        "no_noise": False,
    },
    "analysis": {
        "grid": {"cells_per_dim": 64, "margin": 0.1},
        "tolerances": {"qv_rel": 0.15, "min_surviving": 30},
    },
}

_TOP_KEYS = {"schema_version", "potential", "crystal", "dynamics", "analysis",
             "output_dir"}
_POTENTIAL_KEYS = {"a", "w", "k"}
_CRYSTAL_KEYS = {"dim", "kind", "epsilon", "domain", "n", "path", "spacing"}
_DOMAIN_KEYS = {"shape", "center", "radius", "lo", "hi"}
_DYNAMICS_KEYS = {"beta", "cooling", "nu", "cap_c", "dt_micro", "t_final",
                  "record_every", "paths", "seed", "no_noise"}
_COOLING_KEYS = {"p", "margin"}
_ANALYSIS_KEYS = {"grid", "tolerances"}
_GRID_KEYS = {"cells_per_dim", "margin", "lo", "hi"}
_TOL_KEYS = {"qv_rel", "min_surviving"}

_CRYSTAL_KINDS = {"lattice_patch", "simplex", "octahedron", "file"}


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_keys(block: dict, allowed: set, where: str, problems: list) -> None:
    for key in block:
        if key not in allowed:
            problems.append(f"{where}: unknown key {key!r}")


def load_config(path: str) -> dict:
    """Parse, validate, and materialize defaults; raises ConfigError."""
    with open(path) as f:
        raw = json.load(f)
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    problems: list = []
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config", problems)

    resolved = copy.deepcopy(_DEFAULTS)
    for section in ("potential", "crystal", "dynamics", "analysis"):
        block = raw.get(section, {})
        if not isinstance(block, dict):
            problems.append(f"{section}: must be an object")
            block = {}
        resolved[section] = _merge(resolved[section], block)
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        problems.append(f"schema_version: expected {SCHEMA_VERSION}")
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str):
            problems.append("output_dir: must be a string")
        else:
            resolved["output_dir"] = raw["output_dir"]

    _validate_potential(resolved["potential"], problems)
    _validate_crystal(resolved["crystal"], resolved["potential"], problems)
    _validate_dynamics(resolved["dynamics"], resolved["potential"], problems)
    _validate_analysis(resolved["analysis"], problems)

    if problems:
        raise ConfigError(problems)
    return resolved


def _merge(defaults: dict, block: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, val in block.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _validate_potential(pot: dict, problems: list) -> None:
    _check_keys(pot, _POTENTIAL_KEYS, "potential", problems)
    for key in ("a", "w", "k"):
        if not (_is_num(pot.get(key)) and pot[key] > 0):
            problems.append(f"potential.{key}: must be a positive number")
    if _is_num(pot.get("a")) and _is_num(pot.get("w")) and not pot["w"] < pot["a"]:
        problems.append(
            "potential.w: the well half-width must satisfy 0 < w < a "
            "(smoothness and vanishing at short distance)")


def _validate_crystal(cry: dict, pot: dict, problems: list) -> None:
    _check_keys(cry, _CRYSTAL_KEYS, "crystal", problems)
    dim = cry.get("dim")
    if not (isinstance(dim, int) and not isinstance(dim, bool) and dim >= 1):
        problems.append("crystal.dim: must be an integer >= 1")
        dim = None
    kind = cry.get("kind")
    if kind not in _CRYSTAL_KINDS:
        problems.append(f"crystal.kind: must be one of {sorted(_CRYSTAL_KINDS)}")
        kind = None
    eps = cry.get("epsilon")
    if not (_is_num(eps) and 0 < eps < 1):
        problems.append("crystal.epsilon: must lie in (0, 1)")
    if "spacing" in cry and cry["spacing"] != pot.get("a"):
        problems.append("crystal.spacing: must equal potential.a (the well minimum)")

    if kind == "lattice_patch":
        domain = cry.get("domain")
        if not isinstance(domain, dict):
            problems.append("crystal.domain: required for lattice_patch")
        else:
            _check_keys(domain, _DOMAIN_KEYS, "crystal.domain", problems)
            shape = domain.get("shape", "ball")
            if shape == "ball":
                if not (_is_num(domain.get("radius")) and domain["radius"] > 0):
                    problems.append("crystal.domain.radius: must be positive")
            elif shape == "box":
                if "lo" not in domain or "hi" not in domain:
                    problems.append("crystal.domain: box needs lo and hi")
            else:
                problems.append("crystal.domain.shape: must be 'ball' or 'box'")
        if dim and _is_num(pot.get("a")) and _is_num(pot.get("w")):
            rng = pot["a"] + pot["w"]
            if not rng < lattice_constant(dim) * pot["a"]:
                problems.append(
                    f"crystal: interaction range a+w={rng:.6g} must be below "
                    f"{lattice_constant(dim):.6g} * a for a {dim}-d lattice patch")
    elif kind == "simplex":
        n = cry.get("n", dim)
        if dim and not (isinstance(n, int) and 1 <= n <= dim):
            problems.append("crystal.n: simplex dimension must satisfy 1 <= n <= dim")
        cry["n"] = n
    elif kind == "octahedron":
        if dim is not None and dim != 3:
            problems.append("crystal.kind octahedron requires dim = 3")
    elif kind == "file":
        if not isinstance(cry.get("path"), str):
            problems.append("crystal.path: required for kind 'file'")


def _validate_dynamics(dyn: dict, pot: dict, problems: list) -> None:
    _check_keys(dyn, _DYNAMICS_KEYS, "dynamics", problems)
    beta, cooling = dyn.get("beta"), dyn.get("cooling")
    if (beta is None) == (cooling is None):
        problems.append("dynamics: provide exactly one of beta or cooling")
    if beta is not None and not (_is_num(beta) and beta > 0):
        problems.append("dynamics.beta: must be a positive number")
    if cooling is not None:
        if not isinstance(cooling, dict):
            problems.append("dynamics.cooling: must be an object")
        else:
            _check_keys(cooling, _COOLING_KEYS, "dynamics.cooling", problems)
            cooling.setdefault("p", 2.0)
            cooling.setdefault("margin", 10.0)
            if not (_is_num(cooling["p"]) and cooling["p"] > 1):
                problems.append("dynamics.cooling.p: must exceed 1")
            if not (_is_num(cooling["margin"]) and cooling["margin"] > 0):
                problems.append("dynamics.cooling.margin: must be positive")
    if dyn.get("nu") is None and dyn.get("cap_c") is None:
        problems.append("dynamics: provide the fluctuation cap via nu or cap_c")
    for key in ("nu", "cap_c", "dt_micro"):
        if dyn.get(key) is not None and not (_is_num(dyn[key]) and dyn[key] > 0):
            problems.append(f"dynamics.{key}: must be a positive number")
    for key in ("t_final", "record_every"):
        if not (_is_num(dyn.get(key)) and dyn[key] > 0):
            problems.append(f"dynamics.{key}: must be a positive number")
    if (_is_num(dyn.get("t_final")) and _is_num(dyn.get("record_every"))
            and dyn["record_every"] > dyn["t_final"]):
        problems.append("dynamics.record_every: cannot exceed t_final")
    if not (isinstance(dyn.get("paths"), int) and dyn["paths"] >= 1):
        problems.append("dynamics.paths: must be an integer >= 1")
    seed = dyn.get("seed")
    if not (isinstance(seed, int) and not isinstance(seed, bool)
            and 0 <= seed < 2**63):
        problems.append("dynamics.seed: must be a nonnegative 64-bit integer")
    if not isinstance(dyn.get("no_noise"), bool):
        problems.append("dynamics.no_noise: must be a boolean")

    # step-size guard is checkable now only with an explicit temperature
    if (_is_num(beta) and dyn.get("dt_micro") is not None
            and _is_num(pot.get("w")) and _is_num(pot.get("k"))):
        curvature = 8.0 * pot["k"] / pot["w"] ** 2
        if dyn["dt_micro"] * beta * curvature > 0.1 * (1 + 1e-12):
            problems.append(
                "dynamics.dt_micro: violates the stability guard "
                "dt * beta * curvature <= 0.1")


def _validate_analysis(ana: dict, problems: list) -> None:
    _check_keys(ana, _ANALYSIS_KEYS, "analysis", problems)
    grid = ana.get("grid", {})
    _check_keys(grid, _GRID_KEYS, "analysis.grid", problems)
    if not (isinstance(grid.get("cells_per_dim"), int) and grid["cells_per_dim"] >= 1):
        problems.append("analysis.grid.cells_per_dim: must be an integer >= 1")
    tol = ana.get("tolerances", {})
    _check_keys(tol, _TOL_KEYS, "analysis.tolerances", problems)
    if not (_is_num(tol.get("qv_rel")) and 0 < tol["qv_rel"] < 1):
        problems.append("analysis.tolerances.qv_rel: must lie in (0, 1)")
    if not (isinstance(tol.get("min_surviving"), int) and tol["min_surviving"] >= 1):
        problems.append("analysis.tolerances.min_surviving: must be an integer >= 1")
