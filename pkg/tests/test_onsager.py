import numpy as np
import pytest
from hypothesis import given, settings

from conftest import SX, SY, SZ, dims, rand_herm, rand_rho, seeds
from seaqt.onsager import (
    affinities,
    conductivity_matrix,
    covariance_matrix,
    dissipative_rates,
    onsager_report,
    quorum_basis,
    restricted_basis,
)
from seaqt.sea import sea_rhs
from seaqt.state import canonical_state, entropy_operator, make_state


def test_basis_d2_is_pauli():
    b = quorum_basis(2)
    got = {tuple(np.round(x, 12).ravel()) for x in b.ops}
    assert got == {tuple(x.ravel()) for x in (SX, SY, SZ)}


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_basis_orthonormal(d, rng):
    b = quorum_basis(d)
    assert len(b) == d * d - 1
    g = np.real(np.einsum("iab,jba->ij", b.ops, b.ops))
    np.testing.assert_allclose(g, 2 * np.eye(len(b)), atol=1e-13)
    for x in b.ops:
        assert abs(np.trace(x)) < 1e-14
    h = rand_herm(d, rng)
    c0, c = b.expand(h)
    np.testing.assert_allclose(b.combine(c0, c), h, atol=1e-13)
    with pytest.raises(ValueError):
        quorum_basis(1)


def test_covariance_matrix_oracle(rng):
    s = make_state(rand_rho(3, rng))
    ops = [rand_herm(3, rng) for _ in range(3)]
    c = covariance_matrix(s, ops)
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            da = a - np.trace(s.rho @ a).real * np.eye(3)
            db = b - np.trace(s.rho @ b).real * np.eye(3)
            assert c[i, j] == pytest.approx(0.5 * np.trace(s.rho @ (da @ db + db @ da)).real, rel=1e-10, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=dims)
def test_report_forms_agree(seed, d):
    rng = np.random.default_rng(seed)
    s = make_state(rand_rho(d, rng))
    H = rand_herm(d, rng)
    rep = onsager_report(s, H, tau_d=0.8)
    assert np.array_equal(rep.L, rep.L.T)
    assert rep.psd_min_eigenvalue >= -1e-10
    ref = rep.entropy_rate_direct
    for v in (rep.entropy_rate_quadratic, rep.entropy_rate_bilinear):
        assert v == pytest.approx(ref, rel=1e-8)
    np.testing.assert_allclose(rep.rates, rep.rates_linear, atol=1e-10 * max(1.0, np.abs(rep.rates).max()))
    # rates are the dissipative part of d<X_j>/dt
    r = sea_rhs(s, H, 0.8)
    unitary = -1j * (H @ s.rho - s.rho @ H)
    direct = [np.trace(x @ (r.drho_dt - unitary)).real for x in quorum_basis(d).ops]
    np.testing.assert_allclose(rep.rates, direct, atol=1e-11)
    # H is in the null space of L
    _, ch = quorum_basis(d).expand(H)
    np.testing.assert_allclose(rep.L @ ch, 0, atol=1e-10)
    assert rep.resistance_flag == "singular"


def test_affinities_reconstruct(rng):
    s = make_state(rand_rho(3, rng))
    a = affinities(s, quorum_basis(3))
    assert a.residual < 1e-12
    with pytest.raises(ValueError):
        affinities(s, quorum_basis(2))


def test_nondissipative_state_flag():
    H = np.diag([0.0, 1.0, 2.0])
    rep = onsager_report(canonical_state(H, T=1.0), H)
    assert rep.L is None and rep.resistance_flag == "undefined"
    assert rep.entropy_rate_direct == 0.0
    d = rep.as_dict()
    assert d["L"] is None and d["resistance_flag"] == "undefined"


def test_singular_state_restricted_basis(rng):
    s = make_state(rand_rho(4, rng, rank=3))
    H = rand_herm(4, rng)
    b = restricted_basis(s)
    assert len(b) == 8
    r = sea_rhs(s, H, tau=1.0)
    rates = dissipative_rates(s, r.dgamma_d, b)
    _, f = b.expand(entropy_operator(s))
    L = conductivity_matrix(s, H, b, 1.0)
    np.testing.assert_allclose(L @ f, rates, atol=1e-10)
    assert float(f @ L @ f) == pytest.approx(r.entropy_rate, rel=1e-8)
    with pytest.raises(ValueError):
        restricted_basis(make_state(np.diag([1.0, 0.0])))
    with pytest.raises(ValueError):
        conductivity_matrix(s, H, b, 0.0)
