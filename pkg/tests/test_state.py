import numpy as np
import pytest
from hypothesis import given, settings

from conftest import SX, SZ, dims, rand_herm, rand_rho, seeds
from seaqt.state import (
    InvalidStateError,
    UnreachableEnergyError,
    canonical_for_energy,
    canonical_for_entropy,
    canonical_state,
    covariance,
    entropy,
    entropy_operator,
    functionals,
    make_state,
    partially_canonical_target,
    purity,
    sqrt_state,
    temperatures,
    trace_distance,
)


def test_make_state_validates():
    with pytest.raises(InvalidStateError):
        make_state(np.array([[1, 1], [0, 0]]))
    with pytest.raises(InvalidStateError):
        make_state(np.diag([0.7, 0.7]))
    with pytest.raises(InvalidStateError):
        make_state(np.diag([1.2, -0.2]))


def test_make_state_clamps_and_records():
    s = make_state(np.diag([1.0 - 1e-14, 1e-14]))
    assert s.rank == 1
    assert s.clamped == pytest.approx(1e-14)
    s = make_state(np.diag([0.5, 0.5 - 1e-6, 1e-6]), rank=2)
    assert s.rank == 2 and s.clamped == pytest.approx(1e-6)
    np.testing.assert_allclose(s.kernel_projector, np.diag([0, 0, 1.0]), atol=1e-15)


def test_entropy_examples():
    assert entropy(make_state(np.diag([1.0, 0.0]))) == 0.0
    assert entropy(make_state(np.eye(2) / 2)) == pytest.approx(np.log(2), rel=1e-15)
    assert entropy(make_state(np.eye(3) / 3), kB=2.0) == pytest.approx(2 * np.log(3), rel=1e-15)
    s = make_state(np.diag([0.5, 0.5, 0.0]))
    np.testing.assert_allclose(entropy_operator(s), np.diag([np.log(2), np.log(2), 0.0]), atol=1e-15)


def test_sqrt_state_squares_to_rho(rng):
    s = make_state(rand_rho(4, rng, rank=2))
    g = sqrt_state(s)
    np.testing.assert_allclose(g.gamma @ g.gamma, s.rho, atol=1e-14)
    np.testing.assert_allclose(g.gamma, g.gamma.conj().T)


def test_functionals_two_level_example():
    # p = (0.8, 0.2) on e = (0, 1): closed-form covariances
    s = make_state(np.diag([0.8, 0.2]))
    H = np.diag([0.0, 1.0])
    f = functionals(s, H)
    lr = np.log(0.8 / 0.2)
    assert f.mean_h == pytest.approx(0.2)
    assert f.cov_hh == pytest.approx(0.16)
    assert f.cov_sh == pytest.approx(0.16 * lr)
    assert f.cov_ss == pytest.approx(0.16 * lr ** 2)
    # canonical: both temperatures equal T with exp(-1/T) = 0.25
    assert f.theta_h == pytest.approx(1 / lr)
    assert f.theta_s == pytest.approx(1 / lr)


def test_temperatures_undefined_flags():
    f = functionals(make_state(np.diag([1.0, 0.0])), SZ)
    assert not f.theta_h_defined and np.isnan(f.theta_h)
    assert not f.theta_s_defined and np.isnan(f.theta_s)
    f = functionals(make_state(np.eye(2) / 2), SZ)
    assert not f.theta_h_defined and not f.theta_s_defined
    assert temperatures(1.0, 0.0, 1.0)[2] is False


@settings(max_examples=40, deadline=None)
@given(seed=seeds, d=dims)
def test_covariance_forms_agree(seed, d):
    rng = np.random.default_rng(seed)
    s = make_state(rand_rho(d, rng))
    H = rand_herm(d, rng)
    g = sqrt_state(s)
    S = entropy_operator(s)
    f = functionals(s, H)
    # oracle: 1/2 Tr rho {dA, dB}
    def cov(a, b):
        da = a - np.trace(s.rho @ a).real * np.eye(d)
        db = b - np.trace(s.rho @ b).real * np.eye(d)
        return 0.5 * np.trace(s.rho @ (da @ db + db @ da)).real
    assert f.cov_hh == pytest.approx(cov(H, H), rel=1e-10)
    assert f.cov_sh == pytest.approx(cov(S, H), rel=1e-9, abs=1e-12)
    assert covariance(g, S, S) == pytest.approx(f.cov_ss, rel=1e-10)
    assert f.cov_sh ** 2 <= f.cov_hh * f.cov_ss * (1 + 1e-10)


def test_trace_distance_and_purity():
    a = make_state(np.diag([1.0, 0.0]))
    b = make_state(np.diag([0.0, 1.0]))
    assert trace_distance(a, b) == pytest.approx(1.0)
    assert trace_distance(a, a) == 0.0
    assert purity(make_state(np.eye(4) / 4)) == pytest.approx(0.25)


def test_canonical_state_examples():
    H = np.diag([0.0, 1.0, 3.0])
    c = canonical_state(H, T=2.0)
    w = np.exp(-np.diag(H) / 2.0)
    np.testing.assert_allclose(np.diag(c.rho).real, w / w.sum(), rtol=1e-13)
    np.testing.assert_allclose(canonical_state(H, T=np.inf).rho, np.eye(3) / 3, atol=1e-15)
    inv = canonical_state(H, T=-1.0)
    assert inv.rho[2, 2].real > inv.rho[0, 0].real
    B = np.diag([1.0, 0.0, 1.0])
    pc = canonical_state(H, T=1.0, B=B)
    assert pc.rho[1, 1].real == pytest.approx(0.0, abs=1e-15)
    assert pc.rho[2, 2].real / pc.rho[0, 0].real == pytest.approx(np.exp(-3.0), rel=1e-12)
    with pytest.raises(ValueError):
        canonical_state(H, T=0.0)
    with pytest.raises(ValueError):
        canonical_state(H, T=1.0, B=np.diag([0.5, 0.0, 0.0]))


def test_canonical_for_energy_and_entropy(rng):
    H = rand_herm(4, rng)
    e = np.linalg.eigvalsh(H)
    for E in np.linspace(e[0] + 0.05, e[-1] - 0.05, 5):
        c = canonical_for_energy(H, E)
        assert np.trace(c.rho @ H).real == pytest.approx(E, abs=1e-10)
    with pytest.raises(UnreachableEnergyError):
        canonical_for_energy(H, e[-1] + 1.0)
    c = canonical_for_entropy(H, 0.9)
    assert entropy(c) == pytest.approx(0.9, abs=1e-10)
    assert functionals(c, H).theta_h > 0
    with pytest.raises(UnreachableEnergyError):
        canonical_for_entropy(H, np.log(4) + 0.1)


def test_partially_canonical_target_is_on_range():
    H = np.diag([0.0, 1.0, 2.0])
    s = make_state(np.diag([0.7, 0.0, 0.3]))
    t = partially_canonical_target(s, H)
    assert t.rho[1, 1].real == pytest.approx(0.0, abs=1e-15)
    assert np.trace(t.rho @ H).real == pytest.approx(0.6, abs=1e-12)
