import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import hypergeom

from pacbound import transductive as tr
from pacbound.errors import DomainError

Q = tr.VapnikQuery(N=1000, r1=0.2, h=10, eps=0.01)


def A_closed(lam, N):
    return 2 * N / lam * np.log(np.cosh(lam / (2 * N)))


def test_registered_slack_covers_the_formula():
    for cap, value in tr.SLACK_TABLE:
        for N in (cap // 100, cap // 10, cap):
            assert tr.slack_formula(N, 1.0) <= tr.slack(N)
        assert tr.slack(cap) - tr.slack_formula(cap, 1.0) < 0.15
    with pytest.raises(DomainError):
        tr.slack(10**9 + 1)


def test_transductive_against_dense_scan():
    N, r1, k = 1000, 0.2, 15
    d = 10 * math.log(math.e * (k + 1) * N / 10) - math.log(0.01)
    lam = np.geomspace(1, 1e4, 200_001)
    vals = (k + 1) / k * -np.expm1(-lam / N * (r1 + d / lam)) / -np.expm1(-lam / N) - r1 / k
    v, l = tr.transductive_bound(Q, k)
    assert v == pytest.approx(vals.min(), abs=1e-9)
    assert l == pytest.approx(lam[np.argmin(vals)], rel=2e-3)


def test_exchangeable_and_same_size_against_dense_scan():
    N, r1 = 1000, 0.2
    d = 10 * math.log(2 * math.e * N / 10) - math.log(0.01)
    lam = np.geomspace(1, 1e4, 200_001)
    A = A_closed(lam, N)
    exch = (r1 * (1 + A) + 2 * d / lam) / (1 - A * (1 - 2 * r1))
    same = 2 * (r1 + d / lam) / (1 - A) - r1
    assert tr.exchangeable_bound(Q)[0] == pytest.approx(exch.min(), abs=1e-8)
    assert tr.transductive_bound_k1(Q)[0] == pytest.approx(same.min(), abs=1e-8)


def _shadow_failure_probability(N, k, eps, bounds):
    # total error count E over the (k+1)N points; training errors are hypergeometric
    n = (k + 1) * N
    worst = 0.0
    e1 = np.arange(N + 1)
    for E in range(n + 1):
        pmf = hypergeom.pmf(e1, n, E, N)
        shadow = (E - e1) / (k * N)
        worst = max(worst, pmf[(shadow > bounds + 1e-12) & (pmf > 0)].sum())
    return worst


@pytest.mark.parametrize("k", [1, 3])
def test_single_classifier_coverage_under_exchangeability(k):
    N, eps = 40, 0.1
    bounds = np.array([tr.transductive_bound(tr.VapnikQuery(N, j / N, 0, eps), k)[0] for j in range(N + 1)])
    assert _shadow_failure_probability(N, k, eps, bounds) <= eps


def test_bounds_grow_with_h_and_r1():
    prev = 0.0
    for h in (1, 5, 10, 20):
        v = tr.transductive_bound(tr.VapnikQuery(1000, 0.2, h), 10)[0]
        assert v > prev
        prev = v
    prev = 0.0
    for r1 in (0.0, 0.1, 0.2, 0.3):
        v = tr.inductive_bound(tr.VapnikQuery(1000, r1, 10, k_grid=tuple(range(1, 30)))).bound
        assert v > prev
        prev = v


def test_inductive_costs_more_than_transductive():
    res = tr.inductive_bound(Q)
    assert res.bound > min(tr.transductive_bound(Q, k)[0] for k in range(1, 65))
    assert res.bound > tr.transductive_bound(Q, res.k_star)[0]


def test_iid_gaussian_form_dominates_exact():
    for r1 in (0.05, 0.2, 0.35):
        exact, _, gauss = tr.inductive_bound_k1_iid(tr.VapnikQuery(1000, r1, 10))
        assert exact <= gauss + 1e-9


def test_vapnik_classical_closed_form():
    dv = 10 * math.log(2 * math.e * 1000 / 10) + math.log(400)
    assert tr.vapnik_classical(Q) == pytest.approx(0.2 + 2 * dv / 1000 + math.sqrt(4 * dv * 0.2 / 1000 + 4 * dv**2 / 1e6))


@settings(max_examples=80, deadline=None)
@given(a=st.floats(1e-4, 5), p=st.floats(0, 1))
def test_gaussian_approximation_gap(a, p):
    gap, bound = tr.gaussian_approximation_gap(a, p)
    assert gap <= bound + 1e-12


def test_zero_complexity_shortcuts():
    q = tr.VapnikQuery(100, 0.0, 0, eps=1.0)
    assert tr.transductive_bound(q, 3)[0] == 0.0


def test_validation():
    with pytest.raises(DomainError):
        tr.VapnikQuery(0, 0.2, 10)
    with pytest.raises(DomainError):
        tr.VapnikQuery(100, 0.2, 10, k_grid=(0, 1))
    with pytest.raises(DomainError):
        tr.complexity("vc", 500, 100, 1, 0.1)
    with pytest.raises(DomainError):
        tr.complexity("other", 5, 100, 1, 0.1)
    with pytest.raises(DomainError):
        tr.transductive_bound(Q, 0)
