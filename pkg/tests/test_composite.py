import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SX, SZ, rand_herm, rand_rho, seeds
from seaqt.composite import (
    composite_rhs,
    composite_state,
    interaction_part,
    local_perceptions,
    mutual_information,
    noninteracting,
    partial_trace,
    partial_trace_matrix,
    perceived,
    product_residual,
    separability_diagnostic,
)
from seaqt.integrator import IntegrationConfig, integrate
from seaqt.models import CompositeSeaModel
from seaqt.sea import sea_rhs
from seaqt.state import entropy_operator, make_state

pairs = st.sampled_from([(2, 2), (2, 3), (3, 2)])


def _ptrace_loops(rho, da, db, over):
    out = np.zeros((da, da) if over == "B" else (db, db), dtype=complex)
    for i in range(out.shape[0]):
        for j in range(out.shape[0]):
            if over == "B":
                out[i, j] = sum(rho[i * db + k, j * db + k] for k in range(db))
            else:
                out[i, j] = sum(rho[k * db + i, k * db + j] for k in range(da))
    return out


def test_partial_trace_against_loops(rng):
    rho = rand_rho(6, rng)
    np.testing.assert_allclose(partial_trace_matrix(rho, (2, 3), "B"), _ptrace_loops(rho, 2, 3, "B"), atol=1e-15)
    np.testing.assert_allclose(partial_trace_matrix(rho, (2, 3), "A"), _ptrace_loops(rho, 2, 3, "A"), atol=1e-15)
    with pytest.raises(ValueError):
        partial_trace_matrix(rho, (2, 2))
    with pytest.raises(ValueError):
        partial_trace_matrix(rho, (2, 3), "C")


def test_bell_state_reductions():
    v = np.array([1, 0, 0, 1]) / np.sqrt(2)
    c = composite_state(np.outer(v, v), (2, 2))
    np.testing.assert_allclose(c.rho_a.rho, np.eye(2) / 2, atol=1e-15)
    assert mutual_information(c) == pytest.approx(2 * np.log(2))
    assert product_residual(c) == pytest.approx(0.5)  # coherence |00><11| is absent from the product


def test_perceived_on_product_operators(rng):
    ra, rb = rand_rho(2, rng), rand_rho(3, rng)
    c = composite_state(np.kron(ra, rb), (2, 3))
    xa, xb = rand_herm(2, rng), rand_herm(3, rng)
    np.testing.assert_allclose(perceived(np.kron(xa, xb), c, "A"), xa * np.trace(rb @ xb).real, atol=1e-13)
    np.testing.assert_allclose(perceived(np.kron(xa, xb), c, "B"), xb * np.trace(ra @ xa).real, atol=1e-13)
    with pytest.raises(ValueError):
        perceived(np.kron(xa, xb), c, "C")


def test_noninteracting_and_interaction_part(rng):
    H = noninteracting(rand_herm(2, rng), rand_herm(3, rng))
    assert interaction_part(H, (2, 3)) < 1e-14
    assert interaction_part(H + 0.2 * np.kron(SX, np.eye(3)[::-1]), (2, 3)) > 0.01


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dims=pairs)
def test_rhs_conservation_and_rates(seed, dims):
    rng = np.random.default_rng(seed)
    n = dims[0] * dims[1]
    c = composite_state(rand_rho(n, rng), dims)
    H = rand_herm(n, rng)
    ta, tb = rng.uniform(0.3, 3.0, size=2)
    r = composite_rhs(c, H, ta, tb)
    assert abs(np.trace(r.drho_dt)) < 1e-12
    assert abs(np.trace(H @ r.drho_dt)) < 1e-11
    assert r.rate_a >= -1e-12 and r.rate_b >= -1e-12
    S = entropy_operator(c.rho_ab)
    assert np.trace(S @ r.drho_dt).real == pytest.approx(r.entropy_rate, rel=1e-8, abs=1e-12)
    np.testing.assert_allclose(r.drho_dt, r.drho_dt.conj().T, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, dims=pairs)
def test_no_signaling(seed, dims):
    rng = np.random.default_rng(seed)
    n = dims[0] * dims[1]
    c = composite_state(rand_rho(n, rng), dims)
    rep = separability_diagnostic(c, rand_herm(dims[0], rng), rand_herm(dims[1], rng), rand_herm(dims[1], rng),
                                  H_a_alt=rand_herm(dims[0], rng))
    assert rep.no_signaling_a <= 1e-12 and rep.no_signaling_b <= 1e-12
    assert not rep.is_product and np.isnan(rep.product_rate)


def test_product_state_reduces_to_single_system(rng):
    ra, rb = rand_rho(2, rng), rand_rho(3, rng)
    c = composite_state(np.kron(ra, rb), (2, 3))
    ha, hb = rand_herm(2, rng), rand_herm(3, rng)
    rep = separability_diagnostic(c, ha, hb, rand_herm(3, rng), tau_a=0.7, tau_b=1.3)
    assert rep.is_product
    assert rep.product_rate < 1e-12
    assert rep.single_system_gap < 1e-12
    r = composite_rhs(c, noninteracting(ha, hb), 0.7, 1.3)
    sb = sea_rhs(make_state(rb), hb, tau=1.3).drho_dt
    np.testing.assert_allclose(partial_trace_matrix(r.drho_dt, (2, 3), "A"), sb, atol=1e-12)


def test_correlated_state_has_local_gap(rng):
    c = composite_state(rand_rho(4, rng), (2, 2))
    rep = separability_diagnostic(c, rand_herm(2, rng), rand_herm(2, rng), rand_herm(2, rng))
    assert rep.single_system_gap > 1e-6


def test_local_perceptions_degenerate():
    # product of pure states: every local deviation vanishes on the support
    c = composite_state(np.kron(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), (2, 2))
    lp = local_perceptions(c, noninteracting(SZ, SZ))
    assert lp.A.cov_mm == 0.0 and lp.B.cov_mm == 0.0
    assert not lp.A.theta_h_defined
    r = composite_rhs(c, noninteracting(SZ, SZ), 1.0, 1.0)
    assert r.fixed_point
    with pytest.raises(ValueError):
        composite_rhs(c, noninteracting(SZ, SZ), 0.0, 1.0)


def test_product_trajectory_stays_product(rng):
    ha, hb = rand_herm(2, rng), rand_herm(2, rng)
    c0 = np.kron(rand_rho(2, rng), rand_rho(2, rng))
    m = CompositeSeaModel(noninteracting(ha, hb), (2, 2), tau_a=0.5, tau_b=2.0)
    tr = integrate(m, c0, IntegrationConfig(t1=5.0, rel_tol=1e-10, abs_tol=1e-12))
    worst = max(product_residual(composite_state(p.state, (2, 2))) for p in tr.points)
    assert worst < 1e-7
    with pytest.raises(ValueError):
        CompositeSeaModel(np.eye(4), (2, 3))
