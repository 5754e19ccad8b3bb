"""Markovian KSGL and Pauli master equations, kept as a baseline for contrast.

The dissipator uses the trace-preserving ordering
``sum_j (V_j rho V_j^dagger - 1/2 {V_j^dagger V_j, rho})``; a jump operator
``V = sqrt(w_nr) |n><r|`` moves population from level ``r`` to level ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import anticommutator, as_operator, commutator, dagger
from .state import DensityState


def _validate_rates(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("transition matrix must be square")
    if np.any(w < 0):
        raise ValueError("transition rates must be nonnegative")
    return w


def jump_operators_from_rates(w, basis=None) -> list[np.ndarray]:
    """``V = sqrt(w[n, r]) |n><r|`` for each nonzero off-diagonal rate ``r -> n``.

    ``basis`` columns give the states ``|n>``; defaults to the computational basis.
    """
    w = _validate_rates(w)
    d = w.shape[0]
    u = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if u.shape != (d, d):
        raise ValueError("basis shape does not match the transition matrix")
    ops = []
    for n in range(d):
        for r in range(d):
            if n != r and w[n, r] > 0:
                ops.append(np.sqrt(w[n, r]) * np.outer(u[:, n], u[:, r].conj()))
    return ops


def dissipator_terms(rho, Vs: Sequence) -> list[np.ndarray]:
    """Individual summands ``V rho V^dagger - 1/2 {V^dagger V, rho}``; each is traceless."""
    rho = np.asarray(rho, dtype=complex)
    out = []
    for v in Vs:
        v = as_operator(v)
        if v.shape != rho.shape:
            raise ValueError("jump operator dimension does not match the state")
        out.append(v @ rho @ dagger(v) - 0.5 * anticommutator(dagger(v) @ v, rho))
    return out


def ksgl_rhs(s: DensityState, H, Vs: Sequence, hbar: float = 1.0) -> np.ndarray:
    """``-i[H, rho]/hbar + sum_j (V_j rho V_j^dagger - 1/2 {V_j^dagger V_j, rho})``."""
    rho = s.rho
    H = np.asarray(H, dtype=complex)
    if H.shape != rho.shape:
        raise ValueError("hamiltonian and state dimensions differ")
    out = -1j * commutator(H, rho) / hbar
    for term in dissipator_terms(rho, Vs):
        out = out + term
    return 0.5 * (out + dagger(out))


def pauli_rhs(p, w) -> np.ndarray:
    """``p_dot_n = sum_r w[n, r] p_r - p_n sum_r w[r, n]``."""
    p = np.asarray(p, dtype=float)
    w = _validate_rates(w)
    if w.shape[0] != p.size:
        raise ValueError("p and w sizes differ")
    if abs(p.sum() - 1.0) > 1e-10 or np.any(p < 0):
        raise ValueError("p must be a probability vector")
    w = w - np.diag(np.diag(w))
    return w @ p - p * w.sum(axis=0)


@dataclass(frozen=True)
class KsglEntropyRate:
    value: float
    divergent: bool


def ksgl_entropy_rate(s: DensityState, Vs: Sequence, kB: float = 1.0, zero_tol: float = 0.0) -> KsglEntropyRate:
    """Entropy rate ``-kB Tr(rho_dot ln rho)`` of the dissipator.

    In the eigenbasis of ``rho``: ``kB sum_j sum_nr |V_nr|^2 rho_r (ln rho_r - ln rho_n)``.
    A populated level ``r`` coupled to an empty level ``n`` makes the rate
    ``+inf`` at that instant; this is returned with ``divergent=True``.
    The commutator contributes nothing.
    """
    p = s.eigvals
    v = s.eigvecs
    occ = p > zero_tol
    logp = np.zeros_like(p)
    logp[occ] = np.log(p[occ])
    total = 0.0
    divergent = False
    for op in Vs:
        vb = dagger(v) @ as_operator(op) @ v
        a = np.abs(vb) ** 2  # a[n, r]
        into_kernel = a[np.ix_(~occ, occ)]
        if np.any(into_kernel > 0):
            divergent = True
        mask = occ[None, :] & occ[:, None]
        total += float(np.sum((a * p[None, :] * (logp[None, :] - logp[:, None]))[mask]))
    if divergent:
        return KsglEntropyRate(float("inf"), True)
    return KsglEntropyRate(kB * total, False)
