"""Two-subsystem locally perceived steepest-entropy-ascent dynamics.

Operators on ``H_A (x) H_B`` use the row-major Kronecker convention of
``numpy.kron``: index ``a * d_B + b``.

For ``J = A`` the locally perceived version of a global operator ``X`` is
``X^A = Tr_B[(I_A (x) rho_B) X]`` and its local deviation is
``(dX)^A = X^A - Tr(rho_A X^A) I_A`` (likewise for ``B``). The local
deviation coincides with ``Tr_B[(I_A (x) rho_B) dX]`` whenever
``Tr[(rho_A (x) rho_B) X] = Tr(rho X)``, e.g. for uncorrelated states, and
is what makes each dissipative term trace- and energy-preserving and
keeps ``Tr_B rho_dot`` independent of ``H_B`` for correlated states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import TOL_RANK, anticommutator, as_hermitian, commutator, dagger
from .sea import SeaRhsResult, sea_rhs
from .state import DensityState, TOL_THETA, entropy, entropy_operator, make_state, temperatures


def _check_dims(n: int, dims) -> tuple[int, int]:
    da, db = (int(x) for x in dims)
    if da < 1 or db < 1 or da * db != n:
        raise ValueError(f"dimension {n} does not factor as {da} x {db}")
    return da, db


def partial_trace_matrix(rho, dims, over: str = "B") -> np.ndarray:
    """Reduced matrix of ``rho`` on ``A`` (``over="B"``) or ``B`` (``over="A"``)."""
    rho = np.asarray(rho, dtype=complex)
    da, db = _check_dims(rho.shape[0], dims)
    r4 = rho.reshape(da, db, da, db)
    if over == "B":
        return np.einsum("ajbj->ab", r4)
    if over == "A":
        return np.einsum("iaib->ab", r4)
    raise ValueError(f"over must be 'A' or 'B', got {over!r}")


def partial_trace(rho, dims, over: str = "B") -> DensityState:
    """Reduced :class:`DensityState` on the remaining subsystem."""
    m = rho.rho if isinstance(rho, DensityState) else rho
    return make_state(partial_trace_matrix(m, dims, over))


@dataclass(frozen=True, eq=False)
class CompositeState:
    rho_ab: DensityState
    dims: tuple
    rho_a: DensityState
    rho_b: DensityState


def composite_state(rho, dims) -> CompositeState:
    s = rho if isinstance(rho, DensityState) else make_state(rho)
    da, db = _check_dims(s.dim, dims)
    return CompositeState(s, (da, db), partial_trace(s, (da, db), "B"), partial_trace(s, (da, db), "A"))


def perceived(x, c: CompositeState, side: str) -> np.ndarray:
    """``Tr_B[(I_A (x) rho_B) X]`` for ``side="A"``, ``Tr_A[(rho_A (x) I_B) X]`` for ``"B"``."""
    da, db = c.dims
    x4 = np.asarray(x, dtype=complex).reshape(da, db, da, db)
    if side == "A":
        out = np.einsum("bf,afcb->ac", c.rho_b.rho, x4)
    elif side == "B":
        out = np.einsum("af,fbae->be", c.rho_a.rho, x4)
    else:
        raise ValueError(side)
    return 0.5 * (out + dagger(out))


def _local_cov(rho_j, x, y) -> float:
    return float(np.real(np.trace(rho_j @ x @ y)))


@dataclass(frozen=True, eq=False)
class LocalTerms:
    """Local perception data for one subsystem."""

    dH: np.ndarray
    dS: np.ndarray
    dM: np.ndarray
    cov_hh: float
    cov_sh: float
    cov_ss: float
    cov_mm: float
    theta_h: float
    theta_h_defined: bool
    independent: bool


@dataclass(frozen=True, eq=False)
class LocalPerception:
    A: LocalTerms
    B: LocalTerms


def _local_terms(c: CompositeState, H, S, side: str, tol_rank: float) -> LocalTerms:
    rho_j = c.rho_a.rho if side == "A" else c.rho_b.rho
    d = rho_j.shape[0]
    eye = np.eye(d)
    hj = perceived(H, c, side)
    sj = perceived(S, c, side)
    tr = np.real(np.trace(rho_j))
    dh = hj - np.real(np.trace(rho_j @ hj)) / tr * eye
    ds = sj - np.real(np.trace(rho_j @ sj)) / tr * eye
    chh = _local_cov(rho_j, dh, dh)
    csh = _local_cov(rho_j, ds, dh)
    css = _local_cov(rho_j, ds, ds)
    ht = hj - np.real(np.trace(hj)) / d * eye
    m2 = _local_cov(rho_j, ht, ht)
    indep = m2 > 0.0 and chh > tol_rank * m2
    coef = csh / chh if indep else 0.0
    dm = ds - coef * dh
    cmm = _local_cov(rho_j, dm, dm)
    th, _, th_def, _ = temperatures(chh, csh, css, TOL_THETA)
    return LocalTerms(dh, ds, dm, chh, csh, css, max(cmm, 0.0), th, th_def, bool(indep))


def local_perceptions(c: CompositeState, H, kB: float = 1.0, tol_rank: float = TOL_RANK) -> LocalPerception:
    """Locally perceived energy, entropy and Massieu deviations for ``A`` and ``B``.

    ``(dM)^J = (dS)^J - (dH)^J / theta_HJ``; when ``theta_HJ`` is undefined the
    same projection is taken with coefficient ``cov_J(S,H)/cov_J(H,H)`` or
    zero if ``(dH)^J`` vanishes on the local support.
    """
    H = as_hermitian(H)
    if H.shape[0] != c.rho_ab.dim:
        raise ValueError("hamiltonian and state dimensions differ")
    S = entropy_operator(c.rho_ab, kB)
    return LocalPerception(_local_terms(c, H, S, "A", tol_rank), _local_terms(c, H, S, "B", tol_rank))


@dataclass(frozen=True, eq=False)
class CompositeRhsResult(SeaRhsResult):
    """Composite right-hand side; ``dgamma_d`` is not defined here and is ``None``."""

    term_a: np.ndarray | None = None
    term_b: np.ndarray | None = None
    rate_a: float = 0.0
    rate_b: float = 0.0
    perception: LocalPerception | None = None


def composite_rhs(c: CompositeState, H, tau_a: float, tau_b: float, hbar: float = 1.0,
                  kB: float = 1.0) -> CompositeRhsResult:
    """``-i[H,rho]/hbar + {dM^A,rho_A} (x) rho_B/(2 kB tau_A) + rho_A (x) {dM^B,rho_B}/(2 kB tau_B)``."""
    if not (tau_a > 0 and tau_b > 0):
        raise ValueError("tau_a and tau_b must be positive")
    H = as_hermitian(H)
    lp = local_perceptions(c, H, kB)
    ra, rb = c.rho_a.rho, c.rho_b.rho
    term_a = np.kron(anticommutator(lp.A.dM, ra), rb) / (2.0 * kB * tau_a)
    term_b = np.kron(ra, anticommutator(lp.B.dM, rb)) / (2.0 * kB * tau_b)
    rho = c.rho_ab.rho
    unitary = -1j * commutator(H, rho) / hbar
    drho = unitary + term_a + term_b
    drho = 0.5 * (drho + dagger(drho))
    rate_a = lp.A.cov_mm / (kB * tau_a)
    rate_b = lp.B.cov_mm / (kB * tau_b)
    return CompositeRhsResult(
        drho_dt=drho, dgamma_h=None, dgamma_d=None, entropy_rate=rate_a + rate_b, tau=float("nan"),
        massieu=None, perp_norm=float(np.sqrt(lp.A.cov_mm + lp.B.cov_mm)),
        fixed_point=bool(lp.A.cov_mm == 0.0 and lp.B.cov_mm == 0.0),
        term_a=term_a, term_b=term_b, rate_a=rate_a, rate_b=rate_b, perception=lp,
    )


def noninteracting(H_a, H_b) -> np.ndarray:
    """``H_A (x) I + I (x) H_B``."""
    H_a = as_hermitian(H_a)
    H_b = as_hermitian(H_b)
    return np.kron(H_a, np.eye(H_b.shape[0])) + np.kron(np.eye(H_a.shape[0]), H_b)


def interaction_part(H, dims) -> float:
    """Largest entry of ``H`` minus its best noninteracting approximation.

    Uses the Hilbert-Schmidt projection ``Tr_B H / d_B (x) I + I (x) Tr_A H / d_A - Tr H / (d_A d_B)``.
    """
    H = as_hermitian(H)
    da, db = _check_dims(H.shape[0], dims)
    ha = partial_trace_matrix(H, dims, "B") / db
    hb = partial_trace_matrix(H, dims, "A") / da
    approx = np.kron(ha, np.eye(db)) + np.kron(np.eye(da), hb) - np.trace(H) / (da * db) * np.eye(da * db)
    return float(np.max(np.abs(H - approx)))


def mutual_information(c: CompositeState, kB: float = 1.0) -> float:
    """``S(rho_A) + S(rho_B) - S(rho_AB)``, a logged correlation measure."""
    return entropy(c.rho_a, kB) + entropy(c.rho_b, kB) - entropy(c.rho_ab, kB)


def product_residual(c: CompositeState) -> float:
    """Largest entry of ``rho_AB - rho_A (x) rho_B``."""
    return float(np.max(np.abs(c.rho_ab.rho - np.kron(c.rho_a.rho, c.rho_b.rho))))


@dataclass(frozen=True)
class SeparabilityReport:
    no_signaling_a: float
    no_signaling_b: float
    product_rate: float
    single_system_gap: float
    is_product: bool


def separability_diagnostic(c: CompositeState, H_a, H_b, H_b_alt, tau_a: float = 1.0, tau_b: float = 1.0,
                            hbar: float = 1.0, kB: float = 1.0, H_a_alt=None, product_tol: float = 1e-12
                            ) -> SeparabilityReport:
    """Strong-separability residuals for noninteracting Hamiltonians.

    Returns
    -------
    SeparabilityReport
        ``no_signaling_a``: largest entry of ``Tr_B rho_dot(H_A + H_B) -
        Tr_B rho_dot(H_A + H_B_alt)``. ``no_signaling_b``: the mirror residual
        with ``H_a_alt`` (random-free default: ``H_a`` scaled by 2).
        ``product_rate``: largest entry of ``d/dt (rho - rho_A (x) rho_B)``
        at first order, ``nan`` unless ``c`` is uncorrelated.
        ``single_system_gap``: largest entry of ``Tr_B rho_dot`` minus the
        single-system rate of ``(rho_A, H_A, tau_A)``; zero for products,
        generally nonzero for correlated states.
    """
    dims = c.dims
    H = noninteracting(H_a, H_b)
    H_alt = noninteracting(H_a, H_b_alt)
    r = composite_rhs(c, H, tau_a, tau_b, hbar, kB).drho_dt
    r_alt = composite_rhs(c, H_alt, tau_a, tau_b, hbar, kB).drho_dt
    ns_a = float(np.max(np.abs(partial_trace_matrix(r, dims, "B") - partial_trace_matrix(r_alt, dims, "B"))))
    H_a_alt = 2.0 * as_hermitian(H_a) if H_a_alt is None else H_a_alt
    r_alt_a = composite_rhs(c, noninteracting(H_a_alt, H_b), tau_a, tau_b, hbar, kB).drho_dt
    ns_b = float(np.max(np.abs(partial_trace_matrix(r, dims, "A") - partial_trace_matrix(r_alt_a, dims, "A"))))
    is_product = product_residual(c) <= product_tol
    if is_product:
        ra_dot = partial_trace_matrix(r, dims, "B")
        rb_dot = partial_trace_matrix(r, dims, "A")
        d_res = r - np.kron(ra_dot, c.rho_b.rho) - np.kron(c.rho_a.rho, rb_dot)
        prod_rate = float(np.max(np.abs(d_res)))
    else:
        prod_rate = float("nan")
    single = sea_rhs(c.rho_a, H_a, tau=tau_a, hbar=hbar, kB=kB).drho_dt
    gap = float(np.max(np.abs(partial_trace_matrix(r, dims, "B") - single)))
    return SeparabilityReport(ns_a, ns_b, prod_rate, gap, bool(is_product))
