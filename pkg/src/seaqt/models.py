"""Right-hand-side handles consumed by :func:`seaqt.integrator.integrate`.

A model exposes ``rhs(t, state)``, ``entropy_rate(t, state)``,
``dissipation_norm(t, state)``, ``hamiltonian(t)`` and ``kB``. Optional
attributes: ``preserves_rank`` (zero eigenvalues are structural, default
True), ``conserves_energy``, ``entropy_monotone`` and
``start_warnings(state)``.

Each model caches its last evaluation by state identity and time, so the
integrator's per-step diagnostics reuse the final stage evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .composite import composite_rhs, composite_state
from .ksgl import dissipator_terms, ksgl_entropy_rate, ksgl_rhs
from .operators import as_hermitian, commutator
from .pheno import PhenoMode, pheno_rhs, singular_start_warning
from .sea import TOL_NONDISS, TauD, _sea_rhs
from .state import DensityState


@dataclass(frozen=True)
class _Eval:
    drho_dt: np.ndarray
    entropy_rate: float
    dissipation: float


class _CachedModel:
    kB: float = 1.0
    hbar: float = 1.0
    preserves_rank = True
    conserves_energy = True
    entropy_monotone = True

    def __init__(self):
        self._key = None
        self._val = None

    def hamiltonian(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def _compute(self, t: float, s: DensityState) -> _Eval:
        raise NotImplementedError

    def evaluate(self, t: float, s: DensityState) -> _Eval:
        key = self._key
        if key is not None and key[0] is s and key[1] == t:
            return self._val
        val = self._compute(t, s)
        self._key = (s, t)
        self._val = val
        return val

    def rhs(self, t, s):
        return self.evaluate(t, s).drho_dt

    def entropy_rate(self, t, s):
        return self.evaluate(t, s).entropy_rate

    def dissipation_norm(self, t, s):
        return self.evaluate(t, s).dissipation


class SeaModel(_CachedModel):
    """Single-system steepest entropy ascent.

    Parameters
    ----------
    H : array_like
    tau_d : float or callable, default 1.0
        Constant-speed parametrization; ignored when ``tau`` is given.
    tau : float, optional
        Constant characteristic time.
    H_t : callable, optional
        ``t -> H(t)`` for driven runs. Energy is then not conserved and
        ``conserves_energy`` is False.
    """

    def __init__(self, H, tau_d: TauD = 1.0, tau: float | None = None, hbar: float = 1.0, kB: float = 1.0,
                 H_t: Callable[[float], np.ndarray] | None = None):
        super().__init__()
        self.H = as_hermitian(H)
        self.tau_d = tau_d
        self.tau = tau
        self.hbar = hbar
        self.kB = kB
        self.H_t = H_t
        self.conserves_energy = H_t is None

    def hamiltonian(self, t):
        return self.H if self.H_t is None else as_hermitian(self.H_t(t))

    def _compute(self, t, s):
        H = self.hamiltonian(t)
        if H.shape != s.rho.shape:
            raise ValueError("hamiltonian and state dimensions differ")
        r = _sea_rhs(s, H, self.tau_d, self.tau, self.hbar, self.kB, TOL_NONDISS)
        return _Eval(r.drho_dt, r.entropy_rate, 0.0 if r.fixed_point else r.perp_norm)

    def start_warnings(self, s):
        # rank 1 is a pure state and never moves off the commutator flow
        if s.rank in (1, s.dim):
            return []
        return [f"initial state has rank {s.rank} < {s.dim}: the partially canonical states on its range "
                "are generally unstable, so the end state can depend on roundoff"]


class HamiltonianModel(_CachedModel):
    """Unitary evolution only."""

    def __init__(self, H, hbar: float = 1.0, kB: float = 1.0):
        super().__init__()
        self.H = as_hermitian(H)
        self.hbar = hbar
        self.kB = kB

    def hamiltonian(self, t):
        return self.H

    def _compute(self, t, s):
        return _Eval(-1j * commutator(self.H, s.rho) / self.hbar, 0.0, 0.0)


class ZeroModel(HamiltonianModel):
    """``rho_dot = 0``."""

    def __init__(self, dim: int, kB: float = 1.0):
        super().__init__(np.zeros((dim, dim)), kB=kB)

    def _compute(self, t, s):
        return _Eval(np.zeros_like(s.rho), 0.0, 0.0)


class CompositeSeaModel(_CachedModel):
    """Locally perceived steepest entropy ascent for ``A (x) B``."""

    def __init__(self, H, dims, tau_a: float = 1.0, tau_b: float = 1.0, hbar: float = 1.0, kB: float = 1.0):
        super().__init__()
        self.H = as_hermitian(H)
        self.dims = tuple(int(x) for x in dims)
        if self.dims[0] * self.dims[1] != self.H.shape[0]:
            raise ValueError("composite dims do not match the hamiltonian")
        self.tau_a = tau_a
        self.tau_b = tau_b
        self.hbar = hbar
        self.kB = kB

    def hamiltonian(self, t):
        return self.H

    def _compute(self, t, s):
        r = composite_rhs(composite_state(s, self.dims), self.H, self.tau_a, self.tau_b, self.hbar, self.kB)
        return _Eval(r.drho_dt, r.entropy_rate, r.perp_norm)


class PhenoModel(_CachedModel):
    """``-i[H, rho]/hbar`` plus a phenomenological dissipator.

    Energy is conserved by none of these modes, and entropy is monotone
    only in the Massieu mode at positive ``theta``, so both flags are off.
    """

    conserves_energy = False
    entropy_monotone = False

    def __init__(self, H, mode: PhenoMode, hbar: float = 1.0, kB: float = 1.0):
        super().__init__()
        self.H = as_hermitian(H)
        self.mode = mode
        self.hbar = hbar
        self.kB = kB

    def hamiltonian(self, t):
        return self.H

    def _compute(self, t, s):
        r = pheno_rhs(s, self.H, self.mode, self.kB)
        drho = r.drho_dt - 1j * commutator(self.H, s.rho) / self.hbar
        return _Eval(drho, r.entropy_rate, r.perp_norm)

    def start_warnings(self, s):
        return singular_start_warning(s, self.H, self.mode)


class KsglModel(_CachedModel):
    """Linear KSGL baseline; populates kernels, so ``preserves_rank`` is False."""

    preserves_rank = False
    conserves_energy = False
    entropy_monotone = False

    def __init__(self, H, Vs: Sequence, hbar: float = 1.0, kB: float = 1.0):
        super().__init__()
        self.H = as_hermitian(H)
        self.Vs = [np.asarray(v, dtype=complex) for v in Vs]
        self.hbar = hbar
        self.kB = kB

    def hamiltonian(self, t):
        return self.H

    def _compute(self, t, s):
        drho = ksgl_rhs(s, self.H, self.Vs, self.hbar)
        rate = ksgl_entropy_rate(s, self.Vs, self.kB).value
        diss = sum((d for d in dissipator_terms(s.rho, self.Vs)), np.zeros_like(s.rho))
        return _Eval(drho, rate, float(np.linalg.norm(diss)))
