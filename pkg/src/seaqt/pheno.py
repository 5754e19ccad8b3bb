"""Phenomenological relaxation models built on free-energy-type operators.

Two families, both unit-speed flows in gamma space evaluated in the
eigenbasis of ``rho``:

* Massieu: ``rho_dot_D = {dG, rho} / (2 tau_G sqrt(cov(G,G)))`` with
  ``G = S - H / theta`` at constant ``theta``. ``<G>`` increases at rate
  ``sqrt(cov(G,G)) / tau_G``.
* Helmholtz: ``rho_dot_D = -{dF, rho} / (2 tau_F sqrt(cov(F,F)))`` with
  ``F = H - theta S``. ``theta`` is chosen per mode: ``theta_S`` (entropy is
  conserved, energy descends), a reservoir temperature ``T_R``, or
  ``theta_Q`` such that ``d<H>/dt = T_Q d<S>/dt``.

Only the dissipative term is returned; models add the commutator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import dagger
from .sea import SeaRhsResult
from .state import (
    DensityState,
    SpectralData,
    canonical_for_entropy,
    canonical_state,
    entropy,
    spectral_data,
)

KINDS = ("massieu_const_theta", "helmholtz_theta_S", "helmholtz_reservoir", "heat_interaction")
TOL_COV = 1e-22
TOL_THETA_Q = 1e-10


@dataclass(frozen=True)
class PhenoMode:
    """Model selector.

    ``theta_param`` is ``theta`` for ``massieu_const_theta``, ``T_R`` for
    ``helmholtz_reservoir``, ``T_Q`` for ``heat_interaction`` and unused
    for ``helmholtz_theta_S``. ``tau`` is ``tau_G`` or ``tau_F``.
    """

    kind: str
    theta_param: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown pheno kind {self.kind!r}; expected one of {KINDS}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.kind != "helmholtz_theta_S" and (self.theta_param == 0 or not np.isfinite(self.theta_param)):
            raise ValueError("theta_param must be finite and nonzero")
        if self.kind in ("helmholtz_reservoir", "heat_interaction") and self.theta_param < 0:
            raise ValueError("temperatures must be positive")

    @property
    def massieu(self) -> bool:
        return self.kind == "massieu_const_theta"


@dataclass(frozen=True)
class PhenoRates:
    dH_dt: float
    dS_dt: float
    theta: float
    cov_ff: float
    singular: bool = False


def _theta(sd: SpectralData, mode: PhenoMode) -> tuple[float, bool]:
    """Effective ``theta`` of the mode and a singularity flag."""
    if mode.kind == "massieu_const_theta" or mode.kind == "helmholtz_reservoir":
        return float(mode.theta_param), False
    if mode.kind == "helmholtz_theta_S":
        if sd.cov_ss <= TOL_COV:
            # pure-like states: no entropy direction to remove
            return 0.0, False
        return sd.cov_sh / sd.cov_ss, False
    tq = float(mode.theta_param)
    den = sd.cov_sh - tq * sd.cov_ss
    if abs(den) <= TOL_THETA_Q * abs(tq) * sd.cov_ss or sd.cov_ss <= TOL_COV:
        return float("nan"), True
    return (sd.cov_hh - tq * sd.cov_sh) / den, False


def _direction(sd: SpectralData, mode: PhenoMode, theta: float) -> np.ndarray:
    """Deviation of ``G`` (Massieu) or ``F`` (Helmholtz) in the eigenbasis of ``rho``."""
    ds = np.diag(sd.ds).astype(complex)
    if mode.massieu:
        return ds - sd.dh / theta
    return sd.dh - theta * ds


def _cov(p, x, y) -> float:
    return float(np.real(np.sum(p[:, None] * x * y.T)))


def predicted_rates(s: DensityState, H, mode: PhenoMode, kB: float = 1.0) -> PhenoRates:
    """Closed-form ``d<H>/dt`` and ``d<S>/dt`` of the dissipative term.

    Massieu: ``(cov(S,H) - cov(H,H)/theta, cov(S,S) - cov(S,H)/theta) / (tau_G sqrt(cov(G,G)))``.
    Helmholtz: ``-(cov(H,H) - theta cov(S,H), cov(S,H) - theta cov(S,S)) / (tau_F sqrt(cov(F,F)))``.
    """
    sd = spectral_data(s, H, kB)
    theta, singular = _theta(sd, mode)
    if singular:
        return PhenoRates(0.0, 0.0, theta, float("nan"), True)
    chh, csh, css = sd.cov_hh, sd.cov_sh, sd.cov_ss
    if mode.massieu:
        cgg = css - 2.0 * csh / theta + chh / theta ** 2
        if cgg <= TOL_COV:
            return PhenoRates(0.0, 0.0, theta, max(cgg, 0.0))
        r = np.sqrt(cgg)
        return PhenoRates((csh - chh / theta) / (mode.tau * r), (css - csh / theta) / (mode.tau * r), theta, cgg)
    cff = chh - 2.0 * theta * csh + theta ** 2 * css
    if cff <= TOL_COV:
        return PhenoRates(0.0, 0.0, theta, max(cff, 0.0))
    r = np.sqrt(cff)
    return PhenoRates(-(chh - theta * csh) / (mode.tau * r), -(csh - theta * css) / (mode.tau * r), theta, cff)


def pheno_rhs(s: DensityState, H, mode: PhenoMode, kB: float = 1.0) -> SeaRhsResult:
    """Dissipative term of the selected model.

    The returned ``massieu`` field holds ``G`` or ``F``; ``tau`` holds the
    effective ``theta``. A singular ``theta_Q`` (``theta_S = T_Q``) or a
    vanishing ``cov(F,F)`` returns a zero rate with ``fixed_point=True``;
    the former also carries the flag ``"theta_q_singular"``.
    """
    H = np.asarray(H, dtype=complex)
    if H.shape != s.rho.shape:
        raise ValueError("hamiltonian and state dimensions differ")
    sd = spectral_data(s, H, kB)
    d = sd.p.size
    zero = np.zeros((d, d), dtype=complex)
    theta, singular = _theta(sd, mode)
    if singular:
        return SeaRhsResult(zero, zero, zero, 0.0, theta, None, 0.0, True, ("theta_q_singular",))
    x = _direction(sd, mode, theta)
    p = sd.p
    cxx = max(_cov(p, x, x), 0.0)
    if cxx <= TOL_COV:
        return SeaRhsResult(zero, zero, zero, 0.0, theta, None, 0.0, True, ())
    sign = 1.0 if mode.massieu else -1.0
    sq = np.sqrt(p)[:, None]
    gd_b = sign * sq * x / (2.0 * mode.tau * np.sqrt(cxx))
    drho_b = dagger(gd_b) * sq.T + sq * gd_b
    v = s.eigvecs
    vh = dagger(v)
    drho = v @ (0.5 * (drho_b + dagger(drho_b))) @ vh
    ds = np.diag(sd.ds).astype(complex)
    rate = sign * _cov(p, ds, x) / (mode.tau * np.sqrt(cxx))
    op_b = np.diag(sd.s) - sd.h / theta if mode.massieu else sd.h - theta * np.diag(sd.s)
    return SeaRhsResult(drho, zero, v @ gd_b @ vh, float(rate), theta, v @ op_b @ vh, 2.0 * float(np.sqrt(cxx)),
                        False, ())


def adiabatic_availability(s: DensityState, H, kB: float = 1.0) -> float:
    """``Psi = <H> - <H>_s`` with ``<H>_s`` the energy of the canonical state of equal entropy."""
    H = np.asarray(H, dtype=complex)
    target = canonical_for_entropy(H, entropy(s, kB), kB=kB)
    e = float(np.real(np.trace(s.rho @ H)))
    return e - float(np.real(np.trace(target.rho @ H)))


def available_energy(s: DensityState, H, T_R: float, kB: float = 1.0) -> float:
    """``Omega^R = <H> - <H>_R - T_R (<S> - <S>_R)`` relative to the canonical state at ``T_R``."""
    if not T_R > 0:
        raise ValueError("T_R must be positive")
    H = np.asarray(H, dtype=complex)
    r = canonical_state(H, T=T_R, kB=kB)
    e = float(np.real(np.trace(s.rho @ H)))
    er = float(np.real(np.trace(r.rho @ H)))
    return e - er - T_R * (entropy(s, kB) - entropy(r, kB))


def singular_start_warning(s: DensityState, H, mode: PhenoMode) -> list[str]:
    """Warn when an isoentropic run starts singular but its target is full rank.

    Zero eigenvalues are conserved by the flow, so the canonical state of
    equal entropy is then unreachable and only part of ``Psi`` is extracted.
    """
    if mode.kind != "helmholtz_theta_S" or s.rank == s.dim:
        return []
    if s.rank == 1:
        return []
    return [f"initial state has rank {s.rank} < {s.dim}: the equal-entropy canonical state is full rank "
            "and cannot be reached; availability extraction will be partial"]
