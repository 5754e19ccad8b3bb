"""Adaptive Dormand-Prince 5(4) time stepping of density-operator dynamics.

Every accepted state is passed back through :func:`~seaqt.state.make_state`
with the initial rank fixed and renormalization off, so that zero
eigenvalues stay structurally zero while trace and energy drift remain
visible as diagnostics. Backward runs use a negative step on the same
right-hand side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .state import DensityState, InvalidStateError, StateFunctionals, functionals, make_state, trace_distance

logger = logging.getLogger(__name__)

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0


@dataclass
class IntegrationConfig:
    """Step control and stopping configuration.

    ``t1 < t0`` integrates backward in time. While the dissipation norm is
    decreasing, steps are capped at ``arrival_fraction`` times its linearly
    extrapolated time to zero (set 0 to disable); this keeps unit-speed
    dissipators from chattering across their fixed point.
    """

    t0: float = 0.0
    t1: float = 10.0
    dt_init: float = 1e-3
    dt_min: float = 1e-14
    dt_max: float = np.inf
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    record_stride: int = 1
    stop_on_equilibrium: bool = True
    equilibrium_threshold: float = 1e-9
    arrival_fraction: float = 0.5
    max_steps: int = 1_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "dt_init", "dt_min", "dt_max", "equilibrium_threshold"):
            v = getattr(self, name)
            if not v > 0:
                raise ValueError(f"{name} must be positive, got {v!r}")
        if not self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need dt_min <= dt_init <= dt_max")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if not (np.isfinite(self.t0) and np.isfinite(self.t1)):
            raise ValueError("t0 and t1 must be finite")

    @property
    def direction(self) -> float:
        return 1.0 if self.t1 >= self.t0 else -1.0


@dataclass(frozen=True, eq=False)
class TrajectoryPoint:
    t: float
    state: DensityState
    functionals: StateFunctionals
    trace_err: float
    energy_err: float
    min_eig: float
    entropy: float
    kernel_drift: float
    entropy_rate: float = float("nan")
    dissipation: float = float("nan")

    @property
    def rho(self) -> np.ndarray:
        return self.state.rho


@dataclass(eq=False)
class Trajectory:
    """Time-ordered records of an integration run.

    ``reason`` is one of ``t_end``, ``equilibrium`` (no dissipation and
    ``[H, rho]`` negligible), ``nondissipative`` (dissipation reached
    zero while the state keeps rotating, e.g. a pure state or limit cycle),
    ``step_underflow``, ``max_steps``.
    """

    points: list = field(default_factory=list)
    reason: str = "t_end"
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    max_kernel_drift: float = 0.0
    max_trace_err: float = 0.0
    max_energy_err: float = 0.0
    min_eig: float = np.inf
    max_entropy_drop: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def final(self) -> TrajectoryPoint:
        return self.points[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def drift_report(self) -> dict:
        return {
            "max_trace_err": self.max_trace_err,
            "max_energy_err": self.max_energy_err,
            "min_eig": self.min_eig,
            "max_entropy_drop": self.max_entropy_drop,
            "max_kernel_drift": self.max_kernel_drift,
            "n_accepted": self.n_accepted,
            "n_rejected": self.n_rejected,
            "n_rhs": self.n_rhs,
            "reason": self.reason,
        }


class IntegrationError(RuntimeError):
    """State validation failed on an accepted step."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t!r})")
        self.t = t


def _error_norm(err, y0, y1, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _stage_state(y, rank):
    return make_state(y, renormalize=False, rank=rank, trace_tol=1e-4, check_hermitian=False)


class _Stepper:
    def __init__(self, model, rank, cfg: IntegrationConfig):
        self.model = model
        self.rank = rank
        self.cfg = cfg
        self.n_rhs = 0

    def f(self, t, s: DensityState):
        self.n_rhs += 1
        return self.model.rhs(t, s)

    def step(self, t, y, k0, h):
        """One DOPRI step.

        Returns ``(y_new, k_last, err, s_last)`` or ``None`` on a bad stage.
        The last stage is evaluated at ``y_new`` itself, so ``s_last`` is the
        validated state there.
        """
        ks = [k0]
        si = None
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
            try:
                si = _stage_state(yi, self.rank)
            except InvalidStateError:
                return None
            ks.append(self.f(t + _C[i] * h, si))
        y5 = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
        err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
        return y5, ks[-1], err, (si if np.array_equal(yi, y5) else None)


def _point(model, t, s, mean_h0, rank, cfg) -> TrajectoryPoint:
    H = model.hamiltonian(t)
    f = functionals(s, H, model.kB)
    return TrajectoryPoint(
        t=float(t),
        state=s,
        functionals=f,
        trace_err=abs(float(np.real(np.trace(s.rho))) - 1.0),
        energy_err=abs(float(np.real(np.trace(s.rho @ H))) - mean_h0),
        min_eig=s.raw_min_eig,
        entropy=f.mean_s,
        kernel_drift=s.clamped if rank < s.dim else 0.0,
        entropy_rate=model.entropy_rate(t, s),
        dissipation=model.dissipation_norm(t, s),
    )


def _stop_event(model, pt: TrajectoryPoint, prev: TrajectoryPoint | None, cfg: IntegrationConfig) -> str | None:
    thr = cfg.equilibrium_threshold
    if not cfg.stop_on_equilibrium or not pt.dissipation < thr:
        return None
    # unit-speed dissipators stop short of the fixed point by about thr, so the
    # commutator gets the looser sqrt(thr) tolerance
    H = model.hamiltonian(pt.t)
    rho = pt.state.rho
    if float(np.max(np.abs(H @ rho - rho @ H))) < np.sqrt(thr) * max(1.0, float(np.max(np.abs(H)))):
        return "equilibrium"
    # only an arrival counts; models that never dissipate run to t1
    if prev is not None and prev.dissipation >= thr:
        return "nondissipative"
    return None


def integrate(model, rho0, cfg: IntegrationConfig) -> Trajectory:
    """Integrate ``model`` from ``rho0`` over ``[cfg.t0, cfg.t1]``.

    Parameters
    ----------
    model
        Object with ``rhs(t, state)``, ``hamiltonian(t)``,
        ``dissipation_norm(t, state)``, ``entropy_rate(t, state)`` and ``kB``
        (see :mod:`seaqt.models`).
    rho0 : DensityState or array_like
    cfg : IntegrationConfig

    Returns
    -------
    Trajectory
        Deterministic for fixed inputs. ``reason`` records why it stopped.

    Raises
    ------
    IntegrationError
        An accepted step failed state validation.
    """
    s = rho0 if isinstance(rho0, DensityState) else make_state(rho0)
    # models whose flow conserves zero eigenvalues declare preserves_rank
    rank = s.rank if getattr(model, "preserves_rank", True) else s.dim
    s = make_state(s.rho, renormalize=False, rank=rank)
    direction = cfg.direction
    t = float(cfg.t0)
    t_end = float(cfg.t1)
    H0 = model.hamiltonian(t)
    mean_h0 = float(np.real(np.trace(s.rho @ H0)))
    traj = Trajectory()
    start_warnings = getattr(model, "start_warnings", None)
    if start_warnings is not None:
        traj.warnings.extend(start_warnings(s))
    p = _point(model, t, s, mean_h0, rank, cfg)
    traj.points.append(p)
    _accumulate(traj, p, None)
    if t == t_end:
        return traj
    ev = _stop_event(model, p, None, cfg)
    if ev is not None:
        traj.reason = ev
        return traj

    stepper = _Stepper(model, rank, cfg)
    y = s.rho
    k = stepper.f(t, s)
    h = direction * min(cfg.dt_init, abs(t_end - t))
    last_recorded = True
    prev = p
    while True:
        if traj.n_accepted + traj.n_rejected >= cfg.max_steps:
            traj.reason = "max_steps"
            break
        remaining = t_end - t
        if abs(h) >= abs(remaining) or abs(remaining - h) < 1e-12 * max(abs(t_end), 1.0):
            h = remaining
        out = stepper.step(t, y, k, h)
        if out is None:
            traj.n_rejected += 1
            h *= FAC_MIN
            if abs(h) < cfg.dt_min:
                traj.reason = "step_underflow"
                break
            continue
        y_new, k_new, err, s_last = out
        en = _error_norm(err, y, y_new, cfg.rel_tol, cfg.abs_tol)
        if en > 1.0 or not np.isfinite(en):
            traj.n_rejected += 1
            fac = FAC_MIN if not np.isfinite(en) else max(FAC_MIN, SAFETY * en ** -0.2)
            h *= fac
            if abs(h) < cfg.dt_min:
                traj.reason = "step_underflow"
                break
            continue
        t_new = t_end if h == remaining else t + h
        s_new = s_last
        if s_new is None:
            try:
                s_new = make_state(y_new, renormalize=False, rank=rank, trace_tol=1e-4)
            except InvalidStateError as exc:
                raise IntegrationError(str(exc), t_new) from exc
        t, y = t_new, s_new.rho
        # last stage already sits at the clamped y5 (first-same-as-last)
        k = k_new
        traj.n_accepted += 1
        done = t == t_end
        pt = _point(model, t, s_new, mean_h0, rank, cfg)
        _accumulate(traj, pt, prev)
        decay = (prev.dissipation - pt.dissipation) / abs(h)
        ev = _stop_event(model, pt, prev, cfg)
        prev = pt
        last_recorded = done or ev is not None or traj.n_accepted % cfg.record_stride == 0
        if last_recorded:
            traj.points.append(pt)
        if ev is not None:
            traj.reason = ev
            break
        if done:
            traj.reason = "t_end"
            break
        fac = FAC_MAX if en == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * en ** -0.2))
        h_abs = min(abs(h) * fac, cfg.dt_max)
        if cfg.arrival_fraction > 0 and decay > 0 and np.isfinite(decay):
            # finite-time arrival at a fixed point: never step past the predicted zero
            h_abs = max(min(h_abs, cfg.arrival_fraction * pt.dissipation / decay), cfg.dt_min)
        h = direction * h_abs
    if not last_recorded:
        traj.points.append(prev)
    traj.n_rhs = stepper.n_rhs
    if traj.reason == "step_underflow":
        logger.warning("step underflow at t=%g", t)
        traj.warnings.append(f"step underflow at t={t!r}")
    return traj


def _accumulate(traj: Trajectory, p: TrajectoryPoint, prev: TrajectoryPoint | None):
    traj.max_trace_err = max(traj.max_trace_err, p.trace_err)
    traj.max_energy_err = max(traj.max_energy_err, p.energy_err)
    traj.min_eig = min(traj.min_eig, p.min_eig)
    traj.max_kernel_drift = max(traj.max_kernel_drift, p.kernel_drift)
    if prev is not None:
        drop = prev.entropy - p.entropy
        if (p.t - prev.t) < 0:
            drop = -drop
        traj.max_entropy_drop = max(traj.max_entropy_drop, drop)


def roundtrip_drift(model, rho0, T: float, cfg: IntegrationConfig | None = None) -> float:
    """Trace distance between ``rho0`` and the result of integrating ``0 -> T -> 0``.

    Equilibrium stopping is disabled for both legs.
    """
    s0 = rho0 if isinstance(rho0, DensityState) else make_state(rho0)
    if T == 0:
        return 0.0
    base = cfg or IntegrationConfig(rel_tol=1e-10, abs_tol=1e-12)
    kw = {k: getattr(base, k) for k in base.__dataclass_fields__}
    kw.update(stop_on_equilibrium=False, record_stride=10**9)
    fwd = integrate(model, s0, IntegrationConfig(**{**kw, "t0": 0.0, "t1": float(T)}))
    if fwd.reason != "t_end":
        raise IntegrationError(f"forward leg stopped: {fwd.reason}", fwd.final.t)
    back = integrate(model, fwd.final.state, IntegrationConfig(**{**kw, "t0": float(T), "t1": 0.0}))
    if back.reason != "t_end":
        raise IntegrationError(f"backward leg stopped: {back.reason}", back.final.t)
    return trace_distance(s0, back.final.state)
