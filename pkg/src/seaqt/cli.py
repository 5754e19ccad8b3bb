"""Command-line front end.

Exit codes: 0 success, 1 failed ``check``, 2 scenario validation error,
3 integration failure (artifacts are still written for truncated runs).
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import reporting
from .integrator import IntegrationError, integrate
from .scenario import (
    MODEL_KINDS,
    ScenarioError,
    apply_override,
    baseline_params,
    build_scenario,
    bundled_scenarios,
    config_hash,
    load_scenario,
    make_model,
)
from .state import trace_distance

log = logging.getLogger("seaqt")

EXIT_OK, EXIT_CHECK, EXIT_INVALID, EXIT_INTEGRATION = 0, 1, 2, 3


class _Failed(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _resolve_file(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    shipped = bundled_scenarios()
    if name in shipped:
        return shipped[name]
    raise ScenarioError("<file>", f"{name} is neither a file nor a bundled scenario ({', '.join(shipped)})")


def _prepare(args) -> dict:
    cfg = load_scenario(_resolve_file(args.scenario))
    for a in args.set or ():
        cfg = apply_override(cfg, a)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.direction == "backward":
        integ = dict(cfg.get("integration", {}))
        t0 = float(integ.get("t0", 0.0))
        t1 = float(integ.get("t1", 10.0))
        integ["t1"] = t0 - (t1 - t0)
        cfg["integration"] = integ
    return cfg


def _out_dir(args, sc) -> Path:
    d = args.out or os.environ.get("SEAQT_OUT") or sc.out_path or "seaqt_out"
    return Path(d)


def _sweep_values(spec: str):
    if "=" not in spec:
        raise ScenarioError("--sweep", "expected key=v1,v2,...")
    key, vals = spec.split("=", 1)
    values = [v.strip() for v in vals.split(",") if v.strip()]
    if not values:
        raise ScenarioError("--sweep", "no values given")
    return key.strip(), values


def _variants(args, cfg):
    if not args.sweep:
        return [(None, cfg)]
    key, values = _sweep_values(args.sweep)
    out = []
    for v in values:
        tag = re.sub(r"[^A-Za-z0-9_.=-]", "_", f"{key}={v}")
        out.append((tag, apply_override(cfg, f"{key}={v}")))
    return out


def _integrate(model, sc):
    cfg = sc.integration
    if sc.stride != 1:
        cfg = type(cfg)(**{**{k: getattr(cfg, k) for k in cfg.__dataclass_fields__}, "record_stride": sc.stride})
    return integrate(model, sc.rho0, cfg)


def _run_one(sc, out: Path, plot: bool) -> int:
    out.mkdir(parents=True, exist_ok=True)
    model = make_model(sc)
    try:
        traj = _integrate(model, sc)
    except IntegrationError as exc:
        raise _Failed(EXIT_INTEGRATION, f"integration failed at t={exc.t!r}: {exc}") from exc
    csv = reporting.write_csv(out / "trajectory.csv", traj, sc.H, sc.observables, sc.hash)
    summ = reporting.summary(traj, sc.H, model, sc.hash, {"model": sc.model_kind})
    reporting.write_json(out / "summary.json", summ)
    if plot:
        from .plotting import plot_trajectories

        plot_trajectories([csv], out / "trajectory.png", [sc.model_kind])
    status = "degraded" if summ["degraded"] else "ok"
    print(f"{csv}  reason={traj.reason}  points={len(traj.points)}  {status}")
    for k, v in summ["drift"].items():
        print(f"  {k:18s} {v}")
    for w in summ["warnings"]:
        print(f"  warning: {w}")
    return EXIT_INTEGRATION if traj.reason in ("step_underflow", "max_steps") else EXIT_OK


def _contrast(sc, tp, tb) -> dict:
    s0 = sc.rho0
    pk = s0.kernel_projector
    kp = float(np.real(np.trace(pk @ tp.final.state.rho)))
    kb = float(np.real(np.trace(pk @ tb.final.state.rho)))
    has_kernel = s0.rank < s0.dim
    tgrid = tp.times
    tb_t = tb.times
    if tb_t[0] > tb_t[-1]:
        tb_t = tb_t[::-1]
        sb = tb.column("entropy")[::-1]
    else:
        sb = tb.column("entropy")
    same_span = np.isclose(tp.final.t, tb.final.t)
    d_entropy = float(np.max(np.abs(tp.column("entropy") - np.interp(tgrid, tb_t, sb)))) if same_span else None
    return {
        "initial_rank": s0.rank,
        "kernel_population_primary": kp,
        "kernel_population_baseline": kb,
        "initial_entropy_rate_primary": tp.points[0].entropy_rate,
        "initial_entropy_rate_baseline": tb.points[0].entropy_rate,
        "final_trace_distance": trace_distance(tp.final.state, tb.final.state),
        "max_entropy_difference": d_entropy,
        "zero_eigenvalue_contrast": bool(has_kernel and ((kp > 1e-9) != (kb > 1e-9))),
    }


def _compare_one(sc, kind: str, out: Path, plot: bool) -> int:
    if kind not in MODEL_KINDS:
        raise ScenarioError("--baseline", f"unknown kind {kind!r}")
    out.mkdir(parents=True, exist_ok=True)
    mp = make_model(sc)
    mb = make_model(sc, kind, baseline_params(sc, kind))
    try:
        tp = _integrate(mp, sc)
        tb = _integrate(mb, sc)
    except IntegrationError as exc:
        raise _Failed(EXIT_INTEGRATION, f"integration failed at t={exc.t!r}: {exc}") from exc
    cp = reporting.write_csv(out / "trajectory.csv", tp, sc.H, sc.observables, sc.hash)
    cb = reporting.write_csv(out / "baseline.csv", tb, sc.H, sc.observables, sc.hash)
    data = {
        "config_hash": sc.hash,
        "primary": reporting.summary(tp, sc.H, mp, sc.hash, {"model": sc.model_kind}),
        "baseline": reporting.summary(tb, sc.H, mb, sc.hash, {"model": kind}),
        "contrast": _contrast(sc, tp, tb),
    }
    reporting.write_json(out / "compare.json", data)
    if plot:
        from .plotting import plot_trajectories

        plot_trajectories([cp, cb], out / "compare.png", [sc.model_kind, kind])
    print(f"{cp}  {cb}")
    for k, v in data["contrast"].items():
        print(f"  {k:32s} {v}")
    bad = {tp.reason, tb.reason} & {"step_underflow", "max_steps"}
    return EXIT_INTEGRATION if bad else EXIT_OK


def _each(args, fn) -> int:
    cfg = _prepare(args)
    code = EXIT_OK
    for tag, variant in _variants(args, cfg):
        sc = build_scenario(variant)
        out = _out_dir(args, sc)
        if tag is not None:
            out = out / tag
        code = max(code, fn(sc, out))
    return code


def cmd_run(args) -> int:
    return _each(args, lambda sc, out: _run_one(sc, out, args.plot))


def cmd_compare(args) -> int:
    return _each(args, lambda sc, out: _compare_one(sc, args.baseline, out, args.plot))


def cmd_check(args) -> int:
    from .selftest import run_checks

    results = run_checks(seed=args.seed or 0, n=args.samples)
    for name, ok, worst in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:24s} {worst:.3e}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_CHECK


def cmd_list(args) -> int:
    for name, path in bundled_scenarios().items():
        print(f"{name:24s} {path}")
    return EXIT_OK


def cmd_hash(args) -> int:
    print(config_hash(_prepare(args)))
    return EXIT_OK


def _common(p):
    p.add_argument("scenario", help="scenario TOML file or bundled scenario name")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scenario entry (repeatable)")
    p.add_argument("--seed", type=int, help="seed for random initial-state bases")
    p.add_argument("--out", help="output directory (default: $SEAQT_OUT, output.path, ./seaqt_out)")
    p.add_argument("--sweep", metavar="KEY=V1,V2", help="independent runs, one subdirectory per value")
    p.add_argument("--direction", choices=("forward", "backward"), default="forward",
                   help="backward integrates from t0 down to t0 - (t1 - t0)")
    p.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seaqt", description="Steepest-entropy-ascent quantum dynamics")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="integrate a scenario")
    _common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("compare", help="run a scenario against a baseline model")
    _common(p)
    p.add_argument("--baseline", required=True, choices=MODEL_KINDS)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("check", help="invariant self-test")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("list", help="list bundled scenarios")
    p.set_defaults(func=cmd_list)
    p = sub.add_parser("hash", help="print the config hash after overrides")
    _common(p)
    p.set_defaults(func=cmd_hash)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except _Failed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except RuntimeError as exc:
        if "matplotlib" in str(exc):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        raise


if __name__ == "__main__":
    sys.exit(main())
