import numpy as np
import pytest
import scipy.linalg as sla

from conftest import SX, SZ, rand_herm, rand_rho
from seaqt.integrator import IntegrationConfig, integrate, roundtrip_drift
from seaqt.models import HamiltonianModel, SeaModel, ZeroModel
from seaqt.state import canonical_for_energy, make_state, trace_distance


def test_config_validation():
    with pytest.raises(ValueError):
        IntegrationConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegrationConfig(dt_init=1.0, dt_max=0.1)
    with pytest.raises(ValueError):
        IntegrationConfig(record_stride=0)
    with pytest.raises(ValueError):
        IntegrationConfig(t1=np.inf)
    assert IntegrationConfig(t0=1.0, t1=0.0).direction == -1.0


def test_unitary_matches_exponential(rng):
    H = rand_herm(3, rng)
    rho0 = rand_rho(3, rng)
    tr = integrate(HamiltonianModel(H), rho0, IntegrationConfig(t1=3.0, rel_tol=1e-11, abs_tol=1e-13))
    u = sla.expm(-1j * H * 3.0)
    assert tr.reason == "t_end" and tr.final.t == 3.0
    np.testing.assert_allclose(tr.final.rho, u @ rho0 @ u.conj().T, atol=1e-9)


def test_hbar_scales_time(rng):
    rho0 = rand_rho(2, rng)
    a = integrate(HamiltonianModel(SX, hbar=2.0), rho0, IntegrationConfig(t1=2.0, rel_tol=1e-11))
    b = integrate(HamiltonianModel(SX), rho0, IntegrationConfig(t1=1.0, rel_tol=1e-11))
    assert trace_distance(a.final.state, b.final.state) < 1e-9


def test_zero_model_and_zero_span():
    rho0 = np.diag([0.3, 0.7])
    tr = integrate(ZeroModel(2), rho0, IntegrationConfig(t1=1.0))
    np.testing.assert_allclose(tr.final.rho, rho0, atol=1e-15)
    tr = integrate(ZeroModel(2), rho0, IntegrationConfig(t1=0.0))
    assert len(tr.points) == 1


def test_commuting_two_level_is_stationary():
    # any function on two levels is affine in the energy: the Massieu deviation vanishes
    tr = integrate(SeaModel(SZ, tau=1.0), np.diag([0.9, 0.1]), IntegrationConfig(t1=5.0))
    assert tr.reason == "equilibrium"
    np.testing.assert_allclose(tr.final.rho, np.diag([0.9, 0.1]), atol=1e-15)


def test_relaxation_and_records(rng):
    H = rand_herm(3, rng)
    rho0 = rand_rho(3, rng)
    cfg = IntegrationConfig(t1=30.0, record_stride=5, stop_on_equilibrium=False)
    tr = integrate(SeaModel(H, tau=0.5), rho0, cfg)
    assert tr.reason == "t_end"
    assert len(tr.points) < tr.n_accepted
    s = tr.column("entropy")
    assert np.all(np.diff(s) >= -1e-12)
    E0 = np.trace(rho0 @ H).real
    assert trace_distance(tr.final.state, canonical_for_energy(H, E0)) < 1e-6
    assert tr.max_trace_err < 1e-10 and tr.max_energy_err < 1e-10
    rep = tr.drift_report()
    assert rep["reason"] == "t_end" and rep["n_accepted"] == tr.n_accepted


def test_equilibrium_stop_and_determinism(rng):
    H = rand_herm(3, rng)
    rho0 = rand_rho(3, rng)
    a = integrate(SeaModel(H, tau_d=1.0), rho0, IntegrationConfig(t1=50.0))
    b = integrate(SeaModel(H, tau_d=1.0), rho0, IntegrationConfig(t1=50.0))
    assert a.reason == "equilibrium" and a.final.t < 50.0
    assert np.array_equal(a.final.rho, b.final.rho) and a.n_accepted == b.n_accepted


def test_backward_direction(rng):
    H = rand_herm(3, rng)
    rho0 = rand_rho(3, rng)
    tr = integrate(SeaModel(H, tau=1.0), rho0, IntegrationConfig(t0=0.0, t1=-0.5))
    assert tr.final.t == -0.5
    assert np.all(np.diff(tr.column("entropy")) <= 1e-12)  # entropy falls as t decreases
    assert tr.column("entropy")[-1] < tr.column("entropy")[0]
    assert tr.max_entropy_drop <= 1e-10


def test_max_steps(rng):
    tr = integrate(HamiltonianModel(SZ), rand_rho(2, rng), IntegrationConfig(t1=100.0, dt_max=0.01, max_steps=10))
    assert tr.reason == "max_steps" and tr.final.t < 100.0


def test_singular_state_keeps_kernel(rng):
    rho0 = rand_rho(4, rng, rank=2)
    tr = integrate(SeaModel(rand_herm(4, rng), tau=1.0), rho0, IntegrationConfig(t1=5.0))
    assert all(p.state.rank == 2 for p in tr.points)
    assert tr.min_eig >= -1e-12


def test_driven_hamiltonian_runs(rng):
    H = rand_herm(2, rng)
    m = SeaModel(H, tau=1.0, H_t=lambda t: H + 0.3 * np.sin(t) * SX)
    assert not m.conserves_energy
    tr = integrate(m, rand_rho(2, rng), IntegrationConfig(t1=2.0))
    assert tr.reason in ("t_end", "equilibrium")
    assert tr.max_trace_err < 1e-9


def test_roundtrip_constant_tau(rng):
    d = 3
    drift = roundtrip_drift(SeaModel(rand_herm(d, rng), tau=1.0), rand_rho(d, rng), 2.0)
    assert drift < 1e-6


def test_singular_sea_start_is_flagged(rng):
    H = rand_herm(3, rng)
    tr = integrate(SeaModel(H), rand_rho(3, rng, rank=2), IntegrationConfig(t1=0.1))
    assert any("rank 2 < 3" in w for w in tr.warnings)
    tr = integrate(SeaModel(H), rand_rho(3, rng), IntegrationConfig(t1=0.1))
    assert tr.warnings == []
