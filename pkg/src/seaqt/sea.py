"""Steepest-entropy-ascent right-hand side for a single isolated system.

The dissipative velocity in gamma space is the component ``S'_perp`` of the
entropy gradient orthogonal to the span of ``gamma`` and ``H' = 2 gamma H``.
Two parametrizations of its magnitude are provided:

* ``tau_d`` (default): ``gdot_D = S'_perp / (2 tau_d |S'_perp|)``, constant
  Fisher-Rao speed ``1/tau_d``. ``tau_d`` may be a float or a callable of the
  :class:`~seaqt.state.DensityState`.
* ``tau``: ``gdot_D = S'_perp / (4 kB tau)``, which gives
  ``rho_dot_D = {dM, rho} / (2 kB tau)`` with a fixed characteristic time.

In both cases ``rho_dot_D = {dM, rho} / (2 kB tau)`` with
``kB tau = tau_d sqrt(cov(M, M))`` and ``M = S - H cov(S,H)/cov(H,H)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np

from .operators import (
    TOL_RANK,
    anticommutator,
    as_hermitian,
    commutator,
    dagger,
    hermitian_part,
    project_orthogonal,
    real_inner,
    select_independent,
)
from .state import (
    DensityState,
    GradientBundle,
    SqrtState,
    covariance,
    entropy_operator,
    functionals,
    SpectralData,
    gradients,
    spectral_data,
    sqrt_state,
    temperatures,
)

TOL_NONDISS = 1e-11

TauD = Union[float, Callable[[DensityState], float]]


@dataclass(frozen=True, eq=False)
class SeaRhsResult:
    """Evaluated right-hand side and the diagnostics produced on the way.

    Attributes
    ----------
    drho_dt : ndarray
    dgamma_h, dgamma_d : ndarray
        Hamiltonian and dissipative velocities in gamma space.
    entropy_rate : float
        ``S' . gdot`` (the Hamiltonian part contributes zero).
    tau : float
        Characteristic time ``kB tau = tau_d sqrt(cov(M,M))``; ``nan`` at
        nondissipative states in the ``tau_d`` parametrization.
    massieu : ndarray or None
        ``M = S - H / theta_H``; ``None`` when ``theta_H`` is undefined.
    perp_norm : float
        ``|S'_perp|``.
    """

    drho_dt: np.ndarray
    dgamma_h: np.ndarray
    dgamma_d: np.ndarray
    entropy_rate: float
    tau: float
    massieu: np.ndarray | None
    perp_norm: float
    fixed_point: bool = False
    flags: tuple = ()


@dataclass(frozen=True)
class MasterCoefficients:
    alpha: float
    beta: float


class Dissipation(NamedTuple):
    perp: np.ndarray
    perp_norm: float
    coef: float
    energy_independent: bool
    bundle: GradientBundle
    entropy_op: np.ndarray


def energy_independent(g: SqrtState, H, tol_rank: float = TOL_RANK) -> bool:
    """Whether ``H'`` is independent of ``gamma``, i.e. ``H`` is not constant on ``Ran rho``.

    ``H`` is shifted by its trace mean first so that the test is insensitive
    to an energy offset.
    """
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    hs = H - np.trace(H).real / d * np.eye(d)
    keep = select_independent([2.0 * g.gamma, 2.0 * g.gamma @ hs], tol_rank)
    return keep == [0, 1]


def dissipation(g: SqrtState, H, kB: float = 1.0, tol_rank: float = TOL_RANK) -> Dissipation:
    """``S'_perp`` by Gram-Schmidt on deviation gradients.

    ``S'_perp = (dS)' - c (dH)'`` with ``c = cov(S,H)/cov(H,H)``, or
    ``c = 0`` when ``H'`` is dependent on ``gamma``.
    """
    b = gradients(g, H, kB)
    indep = energy_independent(g, H, tol_rank)
    if indep:
        c = real_inner(b.dev_entropy, b.dev_energy) / real_inner(b.dev_energy, b.dev_energy)
        perp = b.dev_entropy - c * b.dev_energy
    else:
        c = 0.0
        perp = b.dev_entropy
    return Dissipation(perp, float(np.sqrt(max(real_inner(perp, perp), 0.0))), float(c), indep, b,
                       entropy_operator(g.source, kB))


def perp_by_projection(g: SqrtState, H, kB: float = 1.0) -> np.ndarray:
    """``S'_perp`` by direct projection of ``S'`` off ``{gamma, H'}``."""
    b = gradients(g, H, kB)
    return project_orthogonal(b.entropy, [b.normalization, b.energy])


def _tau_d_value(tau_d: TauD, s: DensityState) -> float:
    v = float(tau_d(s)) if callable(tau_d) else float(tau_d)
    if not v > 0.0 or not np.isfinite(v):
        raise ValueError(f"tau_d must be positive and finite, got {v!r}")
    return v


def roundoff_floor(p: np.ndarray, kB: float = 1.0) -> float:
    """Size of ``|S'_perp|`` produced by eigenvalue roundoff alone.

    An eigenvalue ``p_k`` carries an absolute error of order ``d eps``, so
    ``ln p_k`` is off by ``d eps / p_k`` and ``S'_perp`` by
    ``2 kB sqrt(sum_k d^2 eps^2 / p_k)``. Negligible unless some ``p_k`` is tiny.
    """
    pos = p[p > 0.0]
    return 8.0 * kB * p.size * np.finfo(float).eps * float(np.sqrt(np.sum(1.0 / pos)))


def _scale_spectral(perp_norm: float, s: DensityState, tau_d: TauD, tau: float | None, kB: float,
                    tol_nondiss: float) -> tuple[float, float]:
    """Return ``(k, tau_char)`` with ``gdot_D = k S'_perp``."""
    if tau is not None:
        if not tau > 0.0:
            raise ValueError(f"tau must be positive, got {tau!r}")
        return 1.0 / (4.0 * kB * tau), float(tau)
    td = _tau_d_value(tau_d, s)
    # the unit-speed scaling would turn roundoff into an O(1) velocity
    if perp_norm < max(tol_nondiss, roundoff_floor(s.eigvals, kB)):
        return 0.0, float("nan")
    return 1.0 / (2.0 * td * perp_norm), td * perp_norm / (2.0 * kB)


def _scale(dis: Dissipation, s: DensityState, tau_d: TauD, tau: float | None, kB: float,
           tol_nondiss: float) -> tuple[float, float]:
    return _scale_spectral(dis.perp_norm, s, tau_d, tau, kB, tol_nondiss)


def hamiltonian_drift(g: SqrtState, H, hbar: float = 1.0) -> np.ndarray:
    """``gdot_H = i gamma dH / hbar``."""
    H = np.asarray(H, dtype=complex)
    rho = g.source.rho
    mh = float(np.real(np.trace(rho @ H)))
    return 1j * g.gamma @ (H - mh * np.eye(H.shape[0])) / hbar


def sea_drift(g: SqrtState, H, tau_d: TauD = 1.0, *, tau: float | None = None, kB: float = 1.0,
              tol_nondiss: float = TOL_NONDISS) -> np.ndarray:
    """Dissipative velocity ``gdot_D`` along ``S'_perp``.

    Returns the zero operator in the ``tau_d`` parametrization when
    ``|S'_perp|`` is below ``tol_nondiss`` or the :func:`roundoff_floor`.
    """
    dis = dissipation(g, H, kB)
    k, _ = _scale(dis, g.source, tau_d, tau, kB, tol_nondiss)
    return k * dis.perp


def rho_velocity(g: SqrtState, gdot: np.ndarray) -> np.ndarray:
    """``rho_dot = gdot^dagger gamma + gamma^dagger gdot``."""
    return hermitian_part(2.0 * dagger(gdot) @ g.gamma)


class SpectralDissipation(NamedTuple):
    """Dissipator data in the eigenbasis of ``rho``.

    ``dm`` is the deviation ``dS - c dH`` with ``c = cov(S,H)/cov(H,H)``
    (zero when ``H`` is constant on the range); ``S'_perp = 2 gamma dM``.
    """

    sd: SpectralData
    independent: bool
    coef: float
    dm: np.ndarray
    perp_norm: float


def spectral_dissipation(s: DensityState, H, kB: float = 1.0, tol_rank: float = TOL_RANK) -> SpectralDissipation:
    """Eigenbasis evaluation of ``S'_perp``; same independence rule as :func:`energy_independent`."""
    sd = spectral_data(s, H, kB)
    d = sd.p.size
    eye = np.eye(d)
    ht = sd.h - np.real(np.trace(sd.h)) / d * eye
    m2 = float(sd.p @ np.sum(np.abs(ht) ** 2, axis=1))
    indep = m2 > 0.0 and sd.cov_hh > tol_rank * m2
    c = sd.cov_sh / sd.cov_hh if indep else 0.0
    dm = np.diag(sd.ds).astype(complex) - c * sd.dh
    # kernel rows carry zero weight; the norm is taken on the matrix, never
    # as cov_ss - cov_sh^2/cov_hh, which cancels catastrophically near equilibrium
    perp_norm = 2.0 * float(np.sqrt(max(sd.p @ np.sum(np.abs(dm) ** 2, axis=1), 0.0)))
    return SpectralDissipation(sd, bool(indep), float(c), dm, perp_norm)


def sea_rhs(s: DensityState, H, tau_d: TauD = 1.0, *, tau: float | None = None, hbar: float = 1.0,
            kB: float = 1.0, tol_nondiss: float = TOL_NONDISS) -> SeaRhsResult:
    """Full right-hand side ``rho_dot = -i[H, rho]/hbar + {dM, rho}/(2 kB tau)``.

    Evaluated in the eigenbasis of ``rho`` from ``gdot = gdot_H + gdot_D``,
    so states where ``theta_H`` is undefined (pure, maximally mixed,
    energy-degenerate) go through the same projection without dividing by
    ``cov(S,H)``.
    """
    H = as_hermitian(H)
    if H.shape != s.rho.shape:
        raise ValueError("hamiltonian and state dimensions differ")
    return _sea_rhs(s, H, tau_d, tau, hbar, kB, tol_nondiss)


def _sea_rhs(s, H, tau_d, tau, hbar, kB, tol_nondiss) -> SeaRhsResult:
    # H already validated: integrators call this once per stage
    sp = spectral_dissipation(s, H, kB)
    k, tau_char = _scale_spectral(sp.perp_norm, s, tau_d, tau, kB, tol_nondiss)
    v = s.eigvecs
    vh = dagger(v)
    p = sp.sd.p
    sq = np.sqrt(p)[:, None]
    gd_b = 2.0 * k * sq * sp.dm
    gh_b = 1j * sq * sp.sd.dh / hbar
    g_b = gh_b + gd_b
    drho_b = dagger(g_b) * sq.T + sq * g_b
    drho = v @ (0.5 * (drho_b + dagger(drho_b))) @ vh
    rate = k * sp.perp_norm ** 2
    th, _, th_def, _ = temperatures(sp.sd.cov_hh, sp.sd.cov_sh, sp.sd.cov_ss)
    massieu = v @ (np.diag(sp.sd.s) - sp.sd.h / th) @ vh if th_def else None
    flags = () if th_def else ("theta_h_undefined",)
    return SeaRhsResult(drho, v @ gh_b @ vh, v @ gd_b @ vh, float(rate), tau_char, massieu, sp.perp_norm,
                        k == 0.0, flags)


def entropy_production_rate(s: DensityState, H, tau_d: TauD = 1.0, *, tau: float | None = None,
                            kB: float = 1.0) -> float:
    """``d<S>/dt = S' . gdot_D``, nonnegative."""
    return sea_rhs(s, H, tau_d, tau=tau, kB=kB).entropy_rate


def entropy_rate_forms(s: DensityState, H, tau_d: TauD = 1.0, *, tau: float | None = None,
                       kB: float = 1.0) -> dict:
    """Every closed form of the entropy production rate at ``s``.

    Keys: ``inner`` (``S' . gdot``), ``perp`` (``|S'_perp|^2 / 4 kB tau``),
    ``speed`` (``4 kB tau gdot_D . gdot_D``), ``cov_mm`` (``cov(M,M)/kB tau``
    with ``cov(M,M)`` from the operator ``M``), ``cov_theta``
    (``(cov_ss - cov_sh^2/cov_hh)/kB tau``) and ``sqrt_cov``
    (``sqrt(cov(M,M))/tau_d_eff``). All zero at nondissipative states.
    """
    H = as_hermitian(H)
    r = sea_rhs(s, H, tau_d, tau=tau, kB=kB)
    g = sqrt_state(s)
    b = gradients(g, H, kB)
    if r.fixed_point or r.perp_norm == 0.0:
        z = 0.0
        return dict(inner=r.entropy_rate, perp=z, speed=z, cov_mm=z, cov_theta=z, sqrt_cov=z)
    ktau = kB * r.tau
    dis = dissipation(g, H, kB)
    m_op = entropy_operator(s, kB) - dis.coef * H
    cov_mm = covariance(g, m_op, m_op)
    f = functionals(s, H, kB)
    cov_theta = f.cov_ss - (f.cov_sh ** 2 / f.cov_hh if dis.energy_independent else 0.0)
    tau_d_eff = ktau / np.sqrt(cov_mm) if cov_mm > 0 else float("nan")
    return dict(
        inner=real_inner(b.entropy, r.dgamma_h + r.dgamma_d),
        perp=r.perp_norm ** 2 / (4.0 * ktau),
        speed=4.0 * ktau * real_inner(r.dgamma_d, r.dgamma_d),
        cov_mm=cov_mm / ktau,
        cov_theta=cov_theta / ktau,
        sqrt_cov=np.sqrt(cov_mm) / tau_d_eff,
    )


# master equations

def _plogp(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


def _validate_distribution(p, e, allow_degenerate: bool = False):
    p = np.asarray(p, dtype=float)
    e = np.asarray(e, dtype=float)
    if p.shape != e.shape or p.ndim != 1:
        raise ValueError("p and e must be 1-D of equal length")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("p must be a probability vector")
    var = float(p @ e ** 2 - (p @ e) ** 2)
    if not var > 0.0 and not allow_degenerate:
        raise ValueError("energy variance is zero: degenerate spectrum on the support")
    return p, e, var


def master_coefficients(p, e) -> MasterCoefficients:
    """Nonlinear functionals ``alpha``, ``beta`` of the diagonal master equation."""
    p, e, var = _validate_distribution(p, e)
    plp = _plogp(p)
    se, splp, seplp, se2 = p @ e, plp.sum(), e @ plp, p @ e ** 2
    alpha = (se * seplp - splp * se2) / var
    beta = (splp * se - seplp) / var
    return MasterCoefficients(float(alpha), float(beta))


def master_rhs_diagonal(p, e, tau: float, form: str = "master2", kB: float = 1.0) -> np.ndarray:
    """Population rates for a state commuting with ``H``.

    ``form="master2"``: ``p_n (ds_n - c de_n) / (kB tau)`` with
    ``c = cov(S,H)/cov(H,H)``; ``form="alpha_beta"``:
    ``-(p_n ln p_n + alpha p_n + beta e_n p_n) / tau``.

    With zero energy variance on the support (pure or energy-degenerate
    states) ``master2`` uses ``c = 0``, the same fallback as :func:`sea_rhs`;
    ``alpha_beta`` raises because ``alpha`` and ``beta`` are undefined there.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    p, e, var = _validate_distribution(p, e, allow_degenerate=(form == "master2"))
    if form == "alpha_beta":
        mc = master_coefficients(p, e)
        return -(_plogp(p) + mc.alpha * p + mc.beta * e * p) / tau
    if form != "master2":
        raise ValueError(f"unknown form {form!r}")
    s = np.zeros_like(p)
    nz = p > 0
    s[nz] = -kB * np.log(p[nz])
    ds = s - p @ s
    de = e - p @ e
    c = float(p @ (ds * de)) / var if var > 0.0 else 0.0
    return p * (ds - c * de) / (kB * tau)


def master_rhs_full(s: DensityState, H, tau: float, hbar: float = 1.0, kB: float = 1.0,
                    h_basis: np.ndarray | None = None) -> np.ndarray:
    """Matrix-element rates ``d rho_nm/dt`` in an eigenbasis of ``H``.

    Parameters
    ----------
    tau : float
        Characteristic time; pass ``characteristic_times(...).tau`` to
        compare against the ``tau_d`` parametrization.
    h_basis : ndarray, optional
        Columns form an eigenbasis of ``H``; defaults to ``eigh(H)``.
    """
    H = as_hermitian(H)
    if h_basis is None:
        e, w = np.linalg.eigh(H)
    else:
        w = np.asarray(h_basis, dtype=complex)
        e = np.real(np.diag(dagger(w) @ H @ w))
    u = dagger(w) @ s.eigvecs
    p = s.eigvals
    sv = np.zeros_like(p)
    nz = p > 0
    sv[nz] = -kB * np.log(p[nz])
    mean_s = float(p @ sv)
    rho_h = (u * p) @ dagger(u)
    mean_h = float(np.real(np.sum(np.abs(u) ** 2 * p[None, :] * e[:, None])))
    de = e - mean_h
    ds = sv - mean_s
    g = sqrt_state(s)
    c = dissipation(g, H, kB).coef
    unitary = -1j * rho_h * (e[:, None] - e[None, :]) / hbar
    a = (u * (p * ds)) @ dagger(u)
    diss = (a - c * 0.5 * (de[:, None] + de[None, :]) * rho_h) / (kB * tau)
    return unitary + diss


# diagnostics

@dataclass(frozen=True, eq=False)
class NondissipativeReport:
    is_nondissipative: bool
    B: np.ndarray | None
    T: float | None
    limit_cycle: bool
    perp_norm: float


def nondissipative_check(s: DensityState, H, tol: float = 1e-9, kB: float = 1.0) -> NondissipativeReport:
    """Detect zero entropy production and identify ``B`` and ``T``."""
    H = as_hermitian(H)
    g = sqrt_state(s)
    dis = dissipation(g, H, kB)
    s_norm = np.sqrt(max(real_inner(dis.bundle.entropy, dis.bundle.entropy), 0.0))
    nondiss = s_norm < tol or dis.perp_norm < tol * s_norm
    if not nondiss:
        return NondissipativeReport(False, None, None, False, dis.perp_norm)
    B = s.range_projector
    scale = max(np.max(np.abs(H)), 1.0)
    limit_cycle = bool(np.max(np.abs(commutator(B, H))) > 1e-10 * scale)
    f = functionals(s, H, kB)
    uniform = f.cov_ss <= 1e-16 * max(f.mean_s ** 2, 1.0)
    if f.theta_h_defined and not uniform:
        T = f.theta_h
    elif uniform and f.cov_hh > 1e-20 and s_norm >= tol:
        T = float("inf")
    else:
        T = None
    return NondissipativeReport(True, B, T, limit_cycle, dis.perp_norm)


def _admissible_direction(g: SqrtState, H, rng: np.random.Generator, kB: float) -> np.ndarray:
    d = g.gamma.shape[0]
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    x = 0.5 * (x + dagger(x))
    b = gradients(g, H, kB)
    return project_orthogonal(x @ g.gamma, [b.normalization, b.energy])


def variational_margins(g: SqrtState, H, tau_d: TauD = 1.0, n_samples: int = 1000, rng_seed=0, *,
                        tau: float | None = None, kB: float = 1.0) -> np.ndarray:
    """``S'.delta - S'.gdot_D`` for random admissible ``delta`` with ``|delta| = |gdot_D|``."""
    H = as_hermitian(H)
    gd = sea_drift(g, H, tau_d, tau=tau, kB=kB)
    speed = np.sqrt(real_inner(gd, gd))
    sp = gradients(g, H, kB).entropy
    best = real_inner(sp, gd)
    rng = np.random.default_rng(rng_seed)
    out = np.empty(n_samples)
    for i in range(n_samples):
        delta = _admissible_direction(g, H, rng, kB)
        n = np.sqrt(real_inner(delta, delta))
        delta = delta * (speed / n) if n > 0 else delta
        out[i] = real_inner(sp, delta) - best
    return out


def variational_optimality_check(g: SqrtState, H, tau_d: TauD = 1.0, n_samples: int = 1000, rng_seed=0,
                                 *, tau: float | None = None, kB: float = 1.0, atol: float = 1e-12) -> bool:
    """True iff no sampled admissible equal-norm direction beats ``gdot_D``."""
    m = variational_margins(g, H, tau_d, n_samples, rng_seed, tau=tau, kB=kB)
    return bool(np.all(m <= atol))


@dataclass(frozen=True)
class CharacteristicTimes:
    tau_h: float
    tau: float
    tau_s: float
    tau_d: float
    entropy_rate: float
    rate_bound: float
    tau_s_ok: bool
    rate_ok: bool


def characteristic_times(s: DensityState, H, tau_d: TauD = 1.0, *, tau: float | None = None,
                         hbar: float = 1.0, kB: float = 1.0, slack: float = 1e-10) -> CharacteristicTimes:
    """Hamiltonian, dissipative and entropy-generation time scales.

    Undefined quantities are ``nan``. ``tau_s_ok`` checks ``tau_s >= tau_d``
    and ``rate_ok`` checks ``d<S>/dt <= sqrt(cov_ss)/tau_d``, both with
    relative ``slack``; they are ``True`` when vacuous.
    """
    H = as_hermitian(H)
    f = functionals(s, H, kB)
    r = sea_rhs(s, H, tau_d, tau=tau, hbar=hbar, kB=kB)
    tau_h = hbar / (2.0 * np.sqrt(f.cov_hh)) if f.cov_hh > 0 else float("nan")
    rate = r.entropy_rate
    if r.fixed_point or not np.isfinite(r.tau) or r.perp_norm == 0.0:
        td = _tau_d_value(tau_d, s) if tau is None else float("nan")
        bound = np.sqrt(f.cov_ss) / td if np.isfinite(td) else float("nan")
        return CharacteristicTimes(tau_h, r.tau, float("nan"), td, rate, bound, True, True)
    td = kB * r.tau / (r.perp_norm / 2.0)
    tau_s = np.sqrt(f.cov_ss) / abs(rate) if rate != 0 else float("nan")
    bound = np.sqrt(f.cov_ss) / td
    tau_s_ok = bool(not np.isfinite(tau_s) or tau_s >= td * (1 - slack))
    rate_ok = bool(rate <= bound * (1 + slack) + slack)
    return CharacteristicTimes(tau_h, r.tau, float(tau_s), td, rate, float(bound), tau_s_ok, rate_ok)


def time_energy_bound(s: DensityState, H, F, hbar: float = 1.0) -> tuple[float, float]:
    """Return ``(|d<F>/dt|, 2 sqrt(cov_FF cov_HH)/hbar)`` under Hamiltonian evolution."""
    H = as_hermitian(H)
    F = as_hermitian(F)
    g = sqrt_state(s)
    rate = float(np.real(np.trace(F @ (-1j * commutator(H, s.rho) / hbar))))
    bound = 2.0 * np.sqrt(max(covariance(g, F, F), 0.0) * max(covariance(g, H, H), 0.0)) / hbar
    return abs(rate), float(bound)


def dissipator_anticommutator_form(s: DensityState, H, tau: float, kB: float = 1.0) -> np.ndarray | None:
    """``{dM, rho}/(2 kB tau)`` from the Massieu operator; ``None`` if ``theta_H`` is undefined."""
    H = as_hermitian(H)
    f = functionals(s, H, kB)
    if not f.theta_h_defined:
        return None
    m = entropy_operator(s, kB) - H / f.theta_h
    mm = float(np.real(np.trace(s.rho @ m)))
    dm = m - mm * np.eye(H.shape[0])
    return anticommutator(dm, s.rho) / (2.0 * kB * tau)
