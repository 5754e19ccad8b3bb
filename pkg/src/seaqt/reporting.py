"""CSV and JSON artifacts for trajectories."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .integrator import Trajectory
from .state import purity

BASE_COLUMNS = ("t", "trace", "energy", "entropy", "purity", "theta_h", "theta_s", "entropy_rate", "min_eig")

# bounds a run must satisfy to be reported as not degraded
DRIFT_BOUNDS = {
    "trace": 1e-9,
    "energy_rel": 1e-8,
    "min_eig": -1e-9,
    "entropy_drop": 1e-10,
}


def fmt(x) -> str:
    return format(float(x), ".17g")


def header(dim: int, observables=()) -> list[str]:
    return list(BASE_COLUMNS) + [f"eig_{i}" for i in range(dim)] + [f"obs_{n}" for n in observables]


def rows(traj: Trajectory, H, observables: dict | None = None):
    observables = observables or {}
    H = np.asarray(H)
    for p in traj.points:
        rho = p.state.rho
        f = p.functionals
        vals = [
            p.t,
            float(np.real(np.trace(rho))),
            float(np.real(np.trace(rho @ H))),
            p.entropy,
            purity(p.state),
            f.theta_h,
            f.theta_s,
            p.entropy_rate,
            p.min_eig,
        ]
        vals.extend(p.state.eigvals)
        vals.extend(float(np.real(np.trace(rho @ o))) for o in observables.values())
        yield vals


def write_csv(path, traj: Trajectory, H, observables: dict | None = None, cfg_hash: str = "") -> Path:
    """Trajectory table with a ``# config_hash=...`` comment line above the header."""
    path = Path(path)
    observables = observables or {}
    dim = np.asarray(H).shape[0]
    with path.open("w", newline="\n") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        fh.write(",".join(header(dim, observables)) + "\n")
        for r in rows(traj, H, observables):
            fh.write(",".join(fmt(x) for x in r) + "\n")
    return path


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Inverse of :func:`write_csv`: ``(meta, columns, data)``."""
    meta = {}
    with Path(path).open() as fh:
        lines = fh.read().splitlines()
    i = 0
    while lines[i].startswith("#"):
        k, _, v = lines[i][1:].strip().partition("=")
        meta[k] = v
        i += 1
    cols = lines[i].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[i + 1:]], dtype=float)
    return meta, cols, data.reshape(-1, len(cols))


def degradation(traj: Trajectory, H, conserves_energy: bool = True, entropy_monotone: bool = True) -> list[str]:
    """Violated drift bounds, empty when the run is clean."""
    out = []
    hn = max(float(np.max(np.abs(np.linalg.eigvalsh(np.asarray(H))))), 1.0)
    if traj.max_trace_err > DRIFT_BOUNDS["trace"]:
        out.append(f"trace drift {traj.max_trace_err:.3e}")
    if conserves_energy and traj.max_energy_err > DRIFT_BOUNDS["energy_rel"] * hn:
        out.append(f"energy drift {traj.max_energy_err:.3e}")
    if traj.min_eig < DRIFT_BOUNDS["min_eig"]:
        out.append(f"negative eigenvalue {traj.min_eig:.3e}")
    if entropy_monotone and traj.max_entropy_drop > DRIFT_BOUNDS["entropy_drop"]:
        out.append(f"entropy decrease {traj.max_entropy_drop:.3e}")
    if traj.reason in ("step_underflow", "max_steps"):
        out.append(f"terminated by {traj.reason}")
    return out


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def summary(traj: Trajectory, H, model, cfg_hash: str = "", extra: dict | None = None) -> dict:
    f = traj.final.functionals
    issues = degradation(traj, H, getattr(model, "conserves_energy", True), getattr(model, "entropy_monotone", True))
    out = {
        "config_hash": cfg_hash,
        "reason": traj.reason,
        "t_final": traj.final.t,
        "n_points": len(traj.points),
        "drift": traj.drift_report(),
        "degraded": bool(issues),
        "degradation": issues,
        "warnings": list(traj.warnings),
        "final": f.as_dict() | {"eigenvalues": traj.final.state.eigvals},
    }
    if extra:
        out.update(extra)
    return _clean(out)


def write_json(path, data: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")
    return path
