"""Density operators, square-root states and scalar state functionals.

Units default to ``k_B = 1``. Every function taking ``kB`` treats it as a
plain positive scalar; entropies carry its units and temperatures are
energies divided by it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .operators import TOL_HERM, as_hermitian, as_operator, dagger, hermitian_part, real_inner

ZERO_THRESHOLD = 1e-12
TOL_THETA = 1e-13
TRACE_TOL = 1e-8


class InvalidStateError(ValueError):
    """Raised when a matrix cannot be accepted as a density operator."""


class UnreachableEnergyError(ValueError):
    """Raised when a canonical target lies outside the reachable range."""


@dataclass(frozen=True, eq=False)
class DensityState:
    """Validated density operator with its cached spectral data.

    Attributes
    ----------
    rho : ndarray
        Hermitian, positive semidefinite, rebuilt from the clamped spectrum.
    eigvals : ndarray
        Eigenvalues in descending order; clamped entries are exactly zero.
    eigvecs : ndarray
        Unitary matrix whose columns match ``eigvals``.
    zero_threshold : float
    clamped : float
        Largest magnitude among eigenvalues that were clamped to zero.
    raw_min_eig : float
        Smallest eigenvalue before clamping.
    """

    rho: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    zero_threshold: float
    clamped: float = 0.0
    raw_min_eig: float = 0.0

    @cached_property
    def range_projector(self) -> np.ndarray:
        r = self.range_basis
        return r @ dagger(r)

    @cached_property
    def kernel_projector(self) -> np.ndarray:
        k = self.kernel_basis
        return k @ dagger(k)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigvals > 0.0))

    @property
    def range_basis(self) -> np.ndarray:
        return self.eigvecs[:, : self.rank]

    @property
    def kernel_basis(self) -> np.ndarray:
        return self.eigvecs[:, self.rank:]

    def apply_function(self, f, on_kernel: float = 0.0) -> np.ndarray:
        """Spectral functional calculus: ``sum_k f(p_k) |k><k|`` over the range."""
        vals = np.full(self.dim, on_kernel, dtype=float)
        r = self.rank
        vals[:r] = f(self.eigvals[:r])
        v = self.eigvecs
        return (v * vals) @ dagger(v)


@dataclass(frozen=True, eq=False)
class SqrtState:
    """Square-root representative ``gamma = sqrt(rho)`` (hermitian, PSD)."""

    gamma: np.ndarray
    source: DensityState


@dataclass(frozen=True)
class StateFunctionals:
    """Means, covariances and nonequilibrium temperatures of a state.

    ``theta_h`` and ``theta_s`` are ``nan`` when the corresponding flag
    ``theta_h_defined`` / ``theta_s_defined`` is false.
    """

    mean_h: float
    mean_s: float
    cov_hh: float
    cov_sh: float
    cov_ss: float
    theta_h: float
    theta_s: float
    theta_h_defined: bool
    theta_s_defined: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class GradientBundle:
    """Gradients of the normalization, energy and entropy functionals in gamma space."""

    normalization: np.ndarray
    energy: np.ndarray
    entropy: np.ndarray
    dev_energy: np.ndarray
    dev_entropy: np.ndarray
    mean_h: float = field(default=0.0)
    mean_s: float = field(default=0.0)


def make_state(
    rho_raw,
    zero_threshold: float = ZERO_THRESHOLD,
    renormalize: bool = True,
    rank: int | None = None,
    trace_tol: float = TRACE_TOL,
    check_hermitian: bool = True,
) -> DensityState:
    """Validate a raw matrix and build a :class:`DensityState`.

    Parameters
    ----------
    rho_raw : array_like
        Hermitian matrix with unit trace (within ``trace_tol``).
    zero_threshold : float
        Eigenvalues below this are set to exactly zero.
    renormalize : bool
        Rescale the surviving spectrum to unit sum. Turned off by the
        integrator so that trace drift stays visible.
    rank : int, optional
        Structural rank. When given, the ``d - rank`` smallest eigenvalues are
        clamped regardless of magnitude and their largest absolute value is
        stored in ``clamped``.
    check_hermitian : bool
        Skip the hermiticity test for inputs that are hermitian by
        construction (integrator stages); the hermitian part is still taken.

    Raises
    ------
    InvalidStateError
        Non-hermitian input, trace away from one, or an eigenvalue below
        ``-zero_threshold`` among the retained spectrum.
    """
    try:
        rho = as_hermitian(rho_raw, TOL_HERM) if check_hermitian else hermitian_part(as_operator(rho_raw))
    except ValueError as exc:
        raise InvalidStateError(str(exc)) from exc
    d = rho.shape[0]
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > trace_tol:
        raise InvalidStateError(f"trace {tr!r} differs from 1 by more than {trace_tol:g}")
    w, v = np.linalg.eigh(rho)
    raw_min = float(w[0])
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    if rank is not None:
        if not 1 <= rank <= d:
            raise InvalidStateError(f"rank {rank} outside [1, {d}]")
        clamped = float(np.max(np.abs(w[rank:]), initial=0.0))
        w[rank:] = 0.0
        if w[rank - 1] < -zero_threshold:
            raise InvalidStateError(f"negative eigenvalue {w[rank - 1]:.3e} inside the range")
        w[:rank] = np.maximum(w[:rank], 0.0)
    else:
        if w[-1] < -zero_threshold:
            raise InvalidStateError(f"negative eigenvalue {w[-1]:.3e} below -{zero_threshold:g}")
        small = w < zero_threshold
        clamped = float(np.max(np.abs(w[small]), initial=0.0))
        w[small] = 0.0
    if renormalize:
        w = w / w.sum()
    if not w[0] > 0.0:
        raise InvalidStateError("state has no positive eigenvalue")
    rho = (v * w) @ dagger(v)
    rho = 0.5 * (rho + dagger(rho))
    return DensityState(rho, w, v, zero_threshold, clamped, raw_min)


def sqrt_state(s: DensityState) -> SqrtState:
    """Positive square root ``gamma = sum_k sqrt(p_k) |k><k|``."""
    gamma = s.apply_function(np.sqrt)
    return SqrtState(0.5 * (gamma + dagger(gamma)), s)


def entropy_operator(s: DensityState, kB: float = 1.0) -> np.ndarray:
    """``S = -kB P_ran ln(rho)``; zero on the kernel of ``rho``."""
    return s.apply_function(lambda p: -kB * np.log(p))


def entropy(s: DensityState, kB: float = 1.0) -> float:
    """von Neumann entropy ``-kB sum p ln p`` from the cached spectrum."""
    p = s.eigvals[s.eigvals > 0.0]
    return float(-kB * np.sum(p * np.log(p)))


def _mean(rho: np.ndarray, a: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ a)))


def gradients(g: SqrtState, H, kB: float = 1.0) -> GradientBundle:
    """Normalization, energy and entropy gradients and their deviation forms."""
    H = np.asarray(H, dtype=complex)
    s = g.source
    if H.shape != s.rho.shape:
        raise ValueError("hamiltonian and state dimensions differ")
    gamma = g.gamma
    S = entropy_operator(s, kB)
    eye = np.eye(s.dim)
    mh = _mean(s.rho, H)
    ms = entropy(s, kB)
    return GradientBundle(
        normalization=2.0 * gamma,
        energy=2.0 * gamma @ H,
        entropy=2.0 * gamma @ S,
        dev_energy=2.0 * gamma @ (H - mh * eye),
        dev_entropy=2.0 * gamma @ (S - ms * eye),
        mean_h=mh,
        mean_s=ms,
    )


def covariance(g: SqrtState, a, b) -> float:
    """``1/2 Tr rho {dA, dB}`` via deviation gradients in gamma space."""
    rho = g.source.rho
    eye = np.eye(rho.shape[0])
    da = 2.0 * g.gamma @ (a - _mean(rho, a) * eye)
    db = 2.0 * g.gamma @ (b - _mean(rho, b) * eye)
    return 0.25 * real_inner(da, db)


def temperatures(cov_hh: float, cov_sh: float, cov_ss: float, tol: float = TOL_THETA):
    """Return ``(theta_h, theta_s, h_defined, s_defined)`` from covariances."""
    h_def = cov_sh != 0.0 and abs(cov_sh) >= tol * np.sqrt(max(cov_hh * cov_ss, 0.0))
    s_def = cov_ss > tol and cov_sh != 0.0
    th = cov_hh / cov_sh if h_def else float("nan")
    ts = cov_sh / cov_ss if s_def else float("nan")
    return th, ts, bool(h_def), bool(s_def)


class SpectralData(NamedTuple):
    """Energy and entropy data expressed in the eigenbasis of ``rho``."""

    p: np.ndarray
    s: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    ds: np.ndarray
    mean_h: float
    mean_s: float
    cov_hh: float
    cov_sh: float
    cov_ss: float


def spectral_data(s: DensityState, H, kB: float = 1.0) -> SpectralData:
    """Means and covariances evaluated in the eigenbasis of ``rho``.

    ``cov(A, B) = Re sum_ij p_i dA_ij dB_ji``, which equals
    ``1/2 Tr rho {dA, dB}`` and the deviation-gradient inner product.
    """
    v = s.eigvecs
    h = dagger(v) @ np.asarray(H, dtype=complex) @ v
    h = 0.5 * (h + dagger(h))
    p = s.eigvals
    sv = np.zeros_like(p)
    nz = p > 0.0
    sv[nz] = -kB * np.log(p[nz])
    # means use normalized weights so that deviations are exactly centred even
    # when integration has left Tr(rho) slightly off one
    w = p / p.sum()
    mh = float(w @ np.real(np.diag(h)))
    ms = float(w @ sv)
    d = p.size
    dh = h - mh * np.eye(d)
    ds = sv - ms
    chh = float(p @ np.sum(np.abs(dh) ** 2, axis=1))
    csh = float(p @ (ds * np.real(np.diag(dh))))
    css = float(p @ ds ** 2)
    return SpectralData(p, sv, h, dh, ds, mh, ms, chh, csh, css)


def functionals(s: DensityState, H, kB: float = 1.0, tol_theta: float = TOL_THETA) -> StateFunctionals:
    """Means, covariances and nonequilibrium temperatures.

    Notes
    -----
    ``theta_h = cov_hh / cov_sh`` is undefined when ``|cov_sh|`` is below
    ``tol_theta * sqrt(cov_hh * cov_ss)`` or exactly zero; ``theta_s =
    cov_sh / cov_ss`` is undefined when ``cov_ss <= tol_theta`` or
    ``cov_sh`` vanishes.
    """
    sd = spectral_data(s, H, kB)
    th, ts, hd, sdf = temperatures(sd.cov_hh, sd.cov_sh, sd.cov_ss, tol_theta)
    return StateFunctionals(sd.mean_h, sd.mean_s, sd.cov_hh, sd.cov_sh, sd.cov_ss, th, ts, hd, sdf)


def purity(s: DensityState) -> float:
    return float(np.sum(s.eigvals ** 2))


def trace_distance(a, b) -> float:
    """``1/2 ||a - b||_1`` for density matrices or :class:`DensityState` values."""
    ra = a.rho if isinstance(a, DensityState) else np.asarray(a)
    rb = b.rho if isinstance(b, DensityState) else np.asarray(b)
    diff = ra - rb
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + dagger(diff))))))


# canonical and partially canonical states

def _support_basis(B, d: int) -> np.ndarray:
    if B is None:
        return np.eye(d, dtype=complex)
    B = as_hermitian(B)
    if B.shape != (d, d):
        raise ValueError("projector dimension mismatch")
    if np.max(np.abs(B @ B - B)) > 1e-8:
        raise ValueError("B is not idempotent")
    w, v = np.linalg.eigh(B)
    q = v[:, w > 0.5]
    if q.shape[1] == 0:
        raise InvalidStateError("degenerate support: B is zero")
    return q


def _compressed(H, B):
    H = as_hermitian(H)
    q = _support_basis(B, H.shape[0])
    hb = dagger(q) @ H @ q
    e, u = np.linalg.eigh(0.5 * (hb + dagger(hb)))
    return q @ u, e


def _gibbs_weights(e: np.ndarray, beta: float) -> np.ndarray:
    if beta == 0.0:
        return np.full(e.size, 1.0 / e.size)
    x = -beta * e
    x = x - x.max()
    w = np.exp(x)
    return w / w.sum()


def _embed(basis: np.ndarray, p: np.ndarray, d: int) -> DensityState:
    rho = (basis * p) @ dagger(basis)
    return make_state(rho)


def canonical_state(H, T: float | None = None, B=None, kB: float = 1.0, beta: float | None = None) -> DensityState:
    """(Partially) canonical state at temperature ``T`` supported on ``Ran B``.

    The exponent is taken of the compression of ``H`` onto ``Ran B``. When
    ``[B, H] = 0`` this equals ``B exp(-H/kB T) B`` normalized. When
    ``[B, H] != 0`` the result is nondissipative only for ``T = inf``: the
    cross block ``B H (1 - B)`` enters ``S'_perp`` unless ``cov(S,H) = 0``.

    Pass ``T = inf`` (or ``beta = 0``) for the uniform state on the support;
    negative ``T`` gives population inversion.
    """
    if beta is None:
        if T is None:
            raise ValueError("give T or beta")
        if T == 0:
            raise ValueError("T must be nonzero")
        beta = 0.0 if np.isinf(T) else 1.0 / (kB * T)
    H = as_hermitian(H)
    basis, e = _compressed(H, B)
    p = _gibbs_weights(e, float(beta))
    if not np.all(np.isfinite(p)) or p.sum() <= 0:
        raise InvalidStateError("degenerate support in canonical normalizer")
    return _embed(basis, p, H.shape[0])


def _beta_bracket(e: np.ndarray) -> float:
    spread = float(e.max() - e.min())
    return 700.0 / spread if spread > 0 else 1.0


def canonical_for_energy(H, E: float, B=None, xtol: float = 1e-14) -> DensityState:
    """Canonical state (optionally on ``Ran B``) with mean energy ``E``.

    Solves ``<H>(beta) = E`` by Brent's method; ``<H>`` decreases strictly in
    ``beta`` unless the compressed spectrum is degenerate.
    """
    H = as_hermitian(H)
    basis, e = _compressed(H, B)
    lo, hi = float(e.min()), float(e.max())
    span = max(hi - lo, 1.0)
    if E < lo - 1e-12 * span or E > hi + 1e-12 * span:
        raise UnreachableEnergyError(f"energy {E!r} outside [{lo!r}, {hi!r}]")
    if hi - lo <= 1e-14 * span:
        return _embed(basis, np.full(e.size, 1.0 / e.size), H.shape[0])
    bmax = _beta_bracket(e)

    def f(beta):
        return float(_gibbs_weights(e, beta) @ e) - E

    if f(bmax) >= 0.0:
        beta = bmax
    elif f(-bmax) <= 0.0:
        beta = -bmax
    else:
        beta = optimize.brentq(f, -bmax, bmax, xtol=xtol * bmax, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _embed(basis, _gibbs_weights(e, beta), H.shape[0])


def canonical_for_entropy(H, S_target: float, B=None, kB: float = 1.0) -> DensityState:
    """Canonical state with ``beta >= 0`` and entropy ``S_target``."""
    H = as_hermitian(H)
    basis, e = _compressed(H, B)
    smax = kB * np.log(e.size)
    if S_target < -1e-14 or S_target > smax + 1e-12:
        raise UnreachableEnergyError(f"entropy {S_target!r} outside [0, {smax!r}]")
    bmax = _beta_bracket(e)

    def ent(beta):
        p = _gibbs_weights(e, beta)
        p = p[p > 0]
        return float(-kB * np.sum(p * np.log(p)))

    def f(beta):
        return ent(beta) - S_target

    if f(0.0) <= 0.0:
        beta = 0.0
    elif f(bmax) >= 0.0:
        beta = bmax
    else:
        beta = optimize.brentq(f, 0.0, bmax, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _embed(basis, _gibbs_weights(e, beta), H.shape[0])


def partially_canonical_target(s: DensityState, H) -> DensityState:
    """Canonical state on ``Ran rho`` sharing the mean energy of ``s``."""
    return canonical_for_energy(H, _mean(s.rho, as_hermitian(H)), B=s.range_projector)
