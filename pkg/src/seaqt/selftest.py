"""Fast invariant self-test run by ``seaqt check``."""

from __future__ import annotations

import numpy as np

from .composite import composite_state, separability_diagnostic
from .integrator import IntegrationConfig, integrate
from .ksgl import pauli_rhs
from .models import SeaModel
from .sea import master_rhs_diagonal, sea_rhs, variational_optimality_check
from .state import canonical_state, make_state, sqrt_state


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (a + a.conj().T)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = d if rank is None else rank
    a = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    r = a @ a.conj().T
    return r / np.real(np.trace(r))


def _rates(rng, n):
    worst_tr = worst_e = worst_s = worst_k = 0.0
    for i in range(n):
        d = (2, 3, 4, 8)[i % 4]
        H = random_hermitian(d, rng)
        rank = d - 1 if i % 5 == 0 else None
        s = make_state(random_density(d, rng, rank))
        r = sea_rhs(s, H)
        worst_tr = max(worst_tr, abs(np.trace(r.drho_dt)))
        worst_e = max(worst_e, abs(np.trace(H @ r.drho_dt)) / max(np.linalg.norm(H), 1.0))
        worst_s = max(worst_s, -r.entropy_rate)
        if s.rank < d:
            kb = s.kernel_basis
            worst_k = max(worst_k, float(np.max(np.abs(kb.conj().T @ r.drho_dt @ kb))))
    return [
        ("trace rate", worst_tr <= 1e-12, worst_tr),
        ("energy rate", worst_e <= 1e-10, worst_e),
        ("entropy rate sign", worst_s <= 1e-12, worst_s),
        ("kernel block", worst_k <= 1e-12, worst_k),
    ]


def run_checks(seed: int = 0, n: int = 200) -> list[tuple[str, bool, float]]:
    """List of ``(name, passed, worst_value)``."""
    rng = np.random.default_rng(seed)
    out = _rates(rng, n)

    H = np.diag([0.0, 0.7, 1.9])
    c = canonical_state(H, T=0.8)
    res = float(np.max(np.abs(sea_rhs(c, H).drho_dt)))
    out.append(("canonical fixed point", res <= 1e-10, res))

    s = make_state(random_density(3, rng))
    ok = variational_optimality_check(sqrt_state(s), random_hermitian(3, rng), 1.0, 200, seed)
    out.append(("steepest ascent", bool(ok), 0.0))

    p = np.array([0.6, 0.3, 0.1])
    e = np.array([0.0, 1.0, 2.5])
    gap = float(np.max(np.abs(master_rhs_diagonal(p, e, 1.0) - master_rhs_diagonal(p, e, 1.0, "alpha_beta"))))
    out.append(("master forms", gap <= 1e-12, gap))

    w = np.array([[0.0, 0.0], [0.4, 0.0]])
    pr = pauli_rhs([1.0, 0.0], w)[1]
    sr = master_rhs_diagonal([1.0, 0.0], [0.0, 1.0], 1.0)[1]
    out.append(("pauli contrast", pr == 0.4 and sr == 0.0, pr))

    cs = composite_state(random_density(4, rng), (2, 2))
    rep = separability_diagnostic(cs, random_hermitian(2, rng), random_hermitian(2, rng), random_hermitian(2, rng))
    out.append(("no signaling", rep.no_signaling_a <= 1e-12, rep.no_signaling_a))

    H = random_hermitian(3, rng)
    tr = integrate(SeaModel(H), make_state(random_density(3, rng)), IntegrationConfig(t1=5.0, record_stride=10**6))
    drift = max(tr.max_trace_err, tr.max_energy_err, tr.max_entropy_drop)
    out.append(("trajectory drift", drift <= 1e-9 and tr.min_eig >= -1e-9, drift))
    return out
