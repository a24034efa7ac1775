"""Deterministic artifact readers and writers (JSON reports, path CSVs).

Outputs are write-once and reproducible byte for byte: JSON is dumped with
sorted keys, floats use repr-style shortest form, and every file carries the
configuration hash in a header comment (CSV) or a top-level field (JSON).
"""

import hashlib
import json
import os

import numpy as np

from .dynamics import PathRecord


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(resolved: dict) -> str:
    """Short stable hash of a resolved configuration (output paths excluded)."""
    stripped = {k: v for k, v in resolved.items() if k != "output_dir"}
    return hashlib.sha256(canonical_json(stripped).encode()).hexdigest()[:12]


def write_json(path: str, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path: str):
    with open(path) as f:
        return json.load(f)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def path_csv_name(index: int) -> str:
    return f"path_{index:04d}.csv"


def write_path_csv(path: str, rec: PathRecord, cfg_hash: str) -> None:
    d = rec.com.shape[1]
    cols = (["time"]
            + [f"com_{a}" for a in range(d)]
            + [f"rot_{a}{b}" for a in range(d) for b in range(d)]
            + ["disp_inf", "disp_edge_inf", "energy", "force_sq"]
            + [f"bw_mean_{a}" for a in range(d)])
    with open(path, "w") as f:
        f.write(f"# config_hash={cfg_hash}\n")
        f.write(f"# path_index={rec.path_index} seed={rec.seed} backend={rec.backend} "
                f"dt_micro={_fmt(rec.dt_micro)} steps_per_record={rec.steps_per_record}\n")
        f.write(",".join(cols) + "\n")
        for k in range(len(rec.times)):
            row = ([_fmt(rec.times[k])]
                   + [_fmt(v) for v in rec.com[k]]
                   + [_fmt(v) for v in rec.rotations[k].ravel()]
                   + [_fmt(rec.disp_inf[k]), _fmt(rec.disp_edge_inf[k]),
                      _fmt(rec.energy[k]), _fmt(rec.force_sq[k])]
                   + [_fmt(v) for v in rec.bw_mean[k]])
            f.write(",".join(row) + "\n")


def read_path_csv(path: str, sigma=None) -> PathRecord:
    meta = {}
    with open(path) as f:
        f.readline()  # config hash
        header2 = f.readline().strip().lstrip("# ")
        for tok in header2.split():
            key, _, val = tok.partition("=")
            meta[key] = val
        cols = f.readline().strip().split(",")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    d = sum(1 for c in cols if c.startswith("com_"))
    idx = {c: i for i, c in enumerate(cols)}
    k1 = data.shape[0]
    rot_cols = [idx[f"rot_{a}{b}"] for a in range(d) for b in range(d)]
    return PathRecord(
        times=data[:, idx["time"]],
        com=data[:, [idx[f"com_{a}"] for a in range(d)]],
        rotations=data[:, rot_cols].reshape(k1, d, d),
        disp_inf=data[:, idx["disp_inf"]],
        disp_edge_inf=data[:, idx["disp_edge_inf"]],
        energy=data[:, idx["energy"]],
        force_sq=data[:, idx["force_sq"]],
        bw_mean=data[:, [idx[f"bw_mean_{a}"] for a in range(d)]],
        sigma=sigma,
        offgraph_events=0,
        seed=int(meta.get("seed", 0)),
        path_index=int(meta.get("path_index", 0)),
        backend=meta.get("backend", "unknown"),
        dt_micro=float(meta.get("dt_micro", 0.0)),
        steps_per_record=int(meta.get("steps_per_record", 0)),
    )


def load_run(run_dir: str):
    """(records, summary) from a simulate output directory."""
    summary = read_json(os.path.join(run_dir, "ensemble_summary.json"))
    records = []
    for p, sigma in enumerate(summary["sigmas"]):
        csv_path = os.path.join(run_dir, "paths", path_csv_name(p))
        records.append(read_path_csv(csv_path, sigma=sigma))
    return records, summary


def write_table_csv(path: str, header: list, rows: list, cfg_hash: str = "") -> None:
    with open(path, "w") as f:
        if cfg_hash:
            f.write(f"# config_hash={cfg_hash}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(str(v) if isinstance(v, (str, int)) else _fmt(v)
                             for v in row) + "\n")
