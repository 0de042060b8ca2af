import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pacbound import kernels as kn
from pacbound.errors import BoundUndefined, DomainError

mp.mp.dps = 40


def mp_phi(a, p):
    a, p = mp.mpf(a), mp.mpf(p)
    return -mp.log(1 - p * (1 - mp.e ** (-a))) / a


def mp_phi_inv(a, q):
    a, q = mp.mpf(a), mp.mpf(q)
    return (1 - mp.e ** (-a * q)) / (1 - mp.e ** (-a))


def test_phi_endpoints():
    for a in (-3.0, -1e-8, 0.0, 1e-8, 0.5, 7.0):
        assert kn.phi(a, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert kn.phi(a, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_phi_numeric_example():
    assert kn.phi(0.234, 0.24012) == pytest.approx(0.21968, abs=1e-4)
    assert kn.phi(0.234, 0.24012) == pytest.approx(float(mp_phi(0.234, 0.24012)), rel=1e-13)


def test_phi_inv_numeric_example():
    assert kn.phi_inv(0.234, 0.2 + math.log(100) / 234) == pytest.approx(0.2402, abs=5e-4)


def test_phi_inv_extends_beyond_unit_interval():
    v = kn.phi_inv(0.5, 1.2)
    assert v > 1
    assert v == pytest.approx(float(mp_phi_inv(0.5, 1.2)), rel=1e-13)
    assert kn.phi_inv(0.7, 0.0) == 0.0


@pytest.mark.parametrize("a", [-4.0, -0.3, 1e-7, 2e-6, 0.01, 0.9, 5.0])
@pytest.mark.parametrize("p", [0.0, 0.05, 0.37, 0.8, 1.0])
def test_phi_matches_high_precision(a, p):
    assert kn.phi(a, p) == pytest.approx(float(mp_phi(a, p)), rel=1e-11, abs=1e-15)
    assert kn.phi_inv(a, p) == pytest.approx(float(mp_phi_inv(a, p)), rel=1e-11, abs=1e-15)


def test_taylor_branch_is_continuous():
    # both sides of the |a| = 1e-6 switch agree with the high precision value
    for a in (9.99e-7, 1.001e-6, -9.99e-7, -1.001e-6):
        for p in (0.1, 0.5, 0.9):
            assert kn.phi(a, p) == pytest.approx(float(mp_phi(a, p)), rel=1e-13)
            assert kn.phi_inv(a, p) == pytest.approx(float(mp_phi_inv(a, p)), rel=1e-13)
    assert kn.phi(0.0, 0.3) == 0.3 and kn.phi_inv(0.0, 0.3) == 0.3


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-5, 5).filter(lambda x: x != 0), q=st.floats(0, 1))
def test_phi_round_trip(a, q):
    assert kn.phi(a, kn.phi_inv(a, q)) == pytest.approx(q, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0.01, 5))
def test_phi_convexity(a):
    p = np.linspace(0, 1, 101)
    v = np.array([kn.phi(a, x) for x in p])
    assert np.all(np.diff(v) > 0)
    assert np.all(np.diff(v, 2) >= -1e-12)
    w = np.array([kn.phi(-a, x) for x in p])
    assert np.all(np.diff(w, 2) <= 1e-12)


def test_phi_domain():
    with pytest.raises(DomainError):
        kn.phi(0.5, 1.5)
    with pytest.raises(DomainError):
        kn.phi(float("nan"), 0.5)


def test_psi_examples():
    assert kn.psi(0.7, 0.0, 0.0) == 0.0
    a, p = 0.9, 0.2
    assert kn.psi(a, p, p / math.tanh(a / 2)) == pytest.approx(0.0, abs=1e-15)
    a, p, m = mp.mpf("0.5"), mp.mpf("0.1"), mp.mpf("0.3")
    exact = -mp.log(1 - mp.sinh(a) * (p - m * mp.tanh(a / 2))) / a
    assert kn.psi(0.5, 0.1, 0.3) == pytest.approx(float(exact), rel=1e-13)
    # series to O(a^3): p + a (m - p^2)/2 ... compared loosely
    series = float(p) - 0.5 * 0.5 * (float(m) - float(p) ** 2)
    assert abs(kn.psi(0.5, 0.1, 0.3) - series) < 0.5**2


def test_psi_is_a_three_point_log_laplace():
    # -a psi_a(p, m) = log E exp(-a X), X in {+1, 0, -1} with masses ((m+p)/2, 1-m, (m-p)/2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.uniform(0, 1)
        p = rng.uniform(-m, m)
        a = rng.uniform(-3, 3)
        masses = np.array([(m + p) / 2, 1 - m, (m - p) / 2])
        lap = math.log(masses @ np.exp(-a * np.array([1.0, 0.0, -1.0])))
        assert -a * kn.psi(a, p, m) == pytest.approx(lap, rel=1e-10, abs=1e-13)


def test_psi_undefined():
    with pytest.raises(BoundUndefined):
        kn.psi(3.0, 1.0, 0.0)


def test_phi_tilde():
    assert kn.phi_tilde(0.5, 0.0, 0.3) == pytest.approx(kn.phi(0.5, 0.3))
    assert kn.phi_tilde(0.5, 0.2, 0.0) == 0.0
    y = kn.phi_tilde(0.5, 0.2, 0.3)
    assert kn.phi_tilde_inv(0.5, 0.2, y) == pytest.approx(0.3, abs=1e-10)
    with pytest.raises(DomainError):
        kn.phi_tilde(0.5, 1.0, 0.3)


def test_f_gamma_alpha():
    assert kn.f_gamma_alpha(200, 50, 1000, 0.0) == 0.0
    y = kn.f_gamma_alpha(200, 50, 1000, 0.1)
    assert kn.f_gamma_alpha_inv(200, 50, 1000, y) == pytest.approx(0.1, abs=1e-10)
    t = math.tanh(0.2)
    for x in np.linspace(0, 0.99 / t, 50):
        assert kn.f_gamma_alpha(200, 50, 1000, x) >= (1000 * t - 50) * x - 1e-9
    with pytest.raises(DomainError):
        kn.f_gamma_alpha_inv(200, 50, 1000, -1.0)


def test_a_of_lambda():
    N = 1000
    assert kn.a_of_lambda(2 * N, N) == pytest.approx(math.log(math.cosh(1.0)), rel=1e-14)
    assert kn.a_of_lambda(2 * N, N) == pytest.approx(0.433781, abs=1e-6)
    assert kn.a_of_lambda(1e-9, N) == pytest.approx(0.0, abs=1e-12)
    lams = np.geomspace(1e-3, 1e5, 200)
    A = np.array([kn.a_of_lambda(l, N) for l in lams])
    assert np.all(np.diff(A) > 0)
    assert np.all(A > 0) and np.all(A < lams / (4 * N))
    lam = 100 * N
    # for large lambda, log cosh(x) ~ x - log 2, so 1 - A(lambda) ~ (2N/lambda) log 2
    assert abs((1 - kn.a_of_lambda(lam, N)) / (2 * N / lam * math.log(2)) - 1) < 0.01


def test_binom_tail():
    assert kn.binom_tail(10, 3) == pytest.approx(math.log(176), rel=1e-13)
    assert kn.binom_tail(17, 17) == pytest.approx(17 * math.log(2), rel=1e-13)
    for n in range(1, 51):
        for h in range(0, n + 1):
            exact = math.log(sum(math.comb(n, k) for k in range(h + 1)))
            assert kn.binom_tail(n, h) == pytest.approx(exact, rel=1e-11, abs=1e-12)
            if h > 0:
                assert kn.binom_tail(n, h) <= kn.entropy_bound(n, h) + 1e-12
    with pytest.raises(DomainError):
        kn.binom_tail(3, 4)


def test_xi_map_inequality():
    for a in np.linspace(0.01, 3, 30):
        for q in np.linspace(0, 2, 21):
            assert kn.xi_map(a, q) <= a / math.tanh(a) * q + 1e-12
