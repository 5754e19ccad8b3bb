"""Affinities, conductivities and the quadratic form of entropy production.

With a trace-orthogonal basis ``X_j`` (``Tr X_i X_j = 2 delta_ij``) the
entropy operator expands as ``S / kB = -ln(rho + P_ker) = f0 I + sum_j f_j X_j``.
The dissipative rates then satisfy ``<X_i>_dot = sum_j L_ij f_j`` with the
symmetric positive semidefinite conductivity matrix
``L_ij = [cov(X_i,X_j) - cov(X_i,H) cov(H,X_j) / cov(H,H)] / tau``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .operators import TOL_RANK, dagger, real_inner
from .sea import TauD, sea_rhs
from .state import DensityState, entropy_operator

BASIS_NORM = 2.0


@dataclass(frozen=True, eq=False)
class QuorumBasis:
    """Generalized Gell-Mann operators, ``ops[j]`` for ``j = 0 .. d^2 - 2``."""

    ops: np.ndarray
    dim: int
    norm: float = BASIS_NORM

    def __len__(self):
        return self.ops.shape[0]

    def expand(self, x) -> tuple[float, np.ndarray]:
        """Coefficients ``(c0, c)`` with ``x = c0 I + sum_j c_j X_j`` for Hermitian ``x``."""
        x = np.asarray(x, dtype=complex)
        c0 = float(np.real(np.trace(x))) / self.dim
        c = np.real(np.einsum("jab,ba->j", self.ops, x)) / self.norm
        return c0, c

    def combine(self, c0: float, c) -> np.ndarray:
        return c0 * np.eye(self.dim) + np.einsum("j,jab->ab", np.asarray(c, dtype=float), self.ops)


@lru_cache(maxsize=16)
def _gell_mann(d: int) -> np.ndarray:
    ops = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            ops.extend([sym, anti])
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        ops.append(np.diag(np.sqrt(2.0 / (l * (l + 1))) * diag).astype(complex))
    out = np.array(ops)
    out.flags.writeable = False
    return out


def quorum_basis(dim: int) -> QuorumBasis:
    """Traceless Hermitian basis with ``Tr(X_i X_j) = 2 delta_ij``; ``dim = 2`` gives the Pauli matrices."""
    dim = int(dim)
    if dim < 2:
        raise ValueError("dim must be at least 2")
    return QuorumBasis(_gell_mann(dim), dim)


@dataclass(frozen=True)
class Affinities:
    f0: float
    f: np.ndarray
    residual: float


def affinities(s: DensityState, basis: QuorumBasis) -> Affinities:
    """Expand ``-ln(rho + P_ker)`` in ``{I, X_j}``; ``residual`` is the largest reconstruction error."""
    if basis.dim != s.dim:
        raise ValueError("basis and state dimensions differ")
    a = entropy_operator(s, 1.0)
    f0, f = basis.expand(a)
    res = float(np.max(np.abs(basis.combine(f0, f) - a)))
    return Affinities(f0, f, res)


def _weighted_deviations(s: DensityState, ops) -> np.ndarray:
    """Rows ``sqrt(p_a) (dX)_ab`` in the eigenbasis of ``rho``, flattened."""
    v = s.eigvecs
    p = s.eigvals
    xb = np.einsum("ia,nij,jb->nab", v.conj(), np.asarray(ops, dtype=complex), v)
    means = np.real(np.einsum("naa,a->n", xb, p))
    xb = xb - means[:, None, None] * np.eye(s.dim)[None]
    return (np.sqrt(p)[None, :, None] * xb).reshape(len(ops), -1)


def covariance_matrix(s: DensityState, ops) -> np.ndarray:
    """``C_ij = cov(X_i, X_j) = Re Tr(rho dX_i dX_j)``, symmetrized."""
    y = _weighted_deviations(s, ops)
    c = np.real(y.conj() @ y.T)
    return 0.5 * (c + c.T)


def conductivity_matrix(s: DensityState, H, basis: QuorumBasis, tau: float, tol_rank: float = TOL_RANK
                        ) -> np.ndarray:
    """``L_ij`` at characteristic time ``tau``.

    When ``cov(H,H)`` vanishes on the support the energy subtraction is
    dropped and ``L = C / tau``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    H = np.asarray(H, dtype=complex)
    ops = list(basis.ops) + [H]
    c = covariance_matrix(s, ops)
    cxx = c[:-1, :-1]
    cxh = c[:-1, -1]
    chh = c[-1, -1]
    d = s.dim
    ht = H - np.real(np.trace(H)) / d * np.eye(d)
    m2 = float(np.real(np.trace(s.rho @ ht @ ht)))
    if m2 > 0.0 and chh > tol_rank * m2:
        cxx = cxx - np.outer(cxh, cxh) / chh
    L = cxx / tau
    return 0.5 * (L + L.T)


@dataclass(frozen=True, eq=False)
class OnsagerReport:
    """Linear-response structure of the dissipator at one state.

    ``L`` is ``None`` at nondissipative states in the ``tau_d``
    parametrization, where the characteristic time vanishes.
    ``resistance`` is the inverse of ``L`` when its condition number is
    below ``1e12``; otherwise ``None`` with ``resistance_flag = "singular"``.
    ``L`` always annihilates the coefficients of ``H``, so the flag is the
    usual outcome.
    """

    f0: float
    f: np.ndarray
    L: np.ndarray | None
    rates: np.ndarray
    rates_linear: np.ndarray
    entropy_rate_direct: float
    entropy_rate_quadratic: float
    entropy_rate_bilinear: float
    psd_min_eigenvalue: float
    tau: float
    resistance: np.ndarray | None = None
    resistance_flag: str = "singular"

    def as_dict(self) -> dict:
        def arr(x):
            return None if x is None else np.asarray(x).tolist()

        return {
            "f0": self.f0, "f": arr(self.f), "L": arr(self.L), "rates": arr(self.rates),
            "rates_linear": arr(self.rates_linear), "entropy_rate_direct": self.entropy_rate_direct,
            "entropy_rate_quadratic": self.entropy_rate_quadratic,
            "entropy_rate_bilinear": self.entropy_rate_bilinear,
            "psd_min_eigenvalue": self.psd_min_eigenvalue, "tau": self.tau,
            "resistance": arr(self.resistance), "resistance_flag": self.resistance_flag,
        }


def dissipative_rates(s: DensityState, gdot_d, basis: QuorumBasis) -> np.ndarray:
    """``<X_j>_dot_D = gdot_D . (2 gamma X_j)`` with ``gamma = sqrt(rho)``."""
    v = s.eigvecs
    gamma = (v * np.sqrt(s.eigvals)) @ dagger(v)
    return np.array([real_inner(gdot_d, 2.0 * gamma @ x) for x in basis.ops])


def onsager_report(s: DensityState, H, basis: QuorumBasis | None = None, tau_d: TauD = 1.0, *,
                   tau: float | None = None, kB: float = 1.0) -> OnsagerReport:
    """Rates, conductivities and the three entropy-production forms at ``s``."""
    basis = quorum_basis(s.dim) if basis is None else basis
    r = sea_rhs(s, H, tau_d, tau=tau, kB=kB)
    aff = affinities(s, basis)
    rates = dissipative_rates(s, r.dgamma_d, basis)
    direct = r.entropy_rate
    bilinear = kB * float(aff.f @ rates)
    n = len(basis)
    if not (np.isfinite(r.tau) and r.tau > 0):
        zero = np.zeros(n)
        return OnsagerReport(aff.f0, aff.f, None, rates, zero, direct, 0.0, bilinear, 0.0, r.tau, None, "undefined")
    L = conductivity_matrix(s, H, basis, r.tau)
    lin = L @ aff.f
    quad = kB * float(aff.f @ lin)
    ev = np.linalg.eigvalsh(L)
    mn = float(ev[0])
    resistance, flag = None, "singular"
    if abs(ev[0]) > 0 and abs(ev[-1] / ev[0]) < 1e12:
        resistance, flag = np.linalg.inv(L), "ok"
    return OnsagerReport(aff.f0, aff.f, L, rates, lin, direct, quad, bilinear, mn, r.tau, resistance, flag)


def restricted_basis(s: DensityState) -> QuorumBasis:
    """Gell-Mann operators of ``Ran rho`` embedded in the full space (rank-preserving directions).

    Pairs with ``P_ran`` rather than ``I``, so only the ``c`` part of
    :meth:`QuorumBasis.expand` is meaningful.
    """
    k = s.rank
    if k < 2:
        raise ValueError("restricted basis needs rank >= 2")
    q = s.range_basis
    ops = np.array([q @ x @ dagger(q) for x in _gell_mann(k)])
    return QuorumBasis(ops, s.dim)
