"""Non-localized PAC-Bayesian bounds: unbiased, deviation and uniform-in-lambda forms."""

import math
from dataclasses import dataclass

import numpy as np

from . import finite_model as fm
from .errors import DomainError
from .kernels import phi_inv
from .optimize import minimize_log


@dataclass(frozen=True)
class ScalarBoundQuery:
    """Inputs of the closed-form bounds.

    N sample size, q empirical risk, d complexity in nats, eps confidence.
    """

    N: int
    q: float
    d: float = 0.0
    eps: float = 0.01
    lambda_grid: tuple = None
    alpha: float = 1.1

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"q must lie in [0, 1], got {self.q}")
        if not self.d >= 0.0:
            raise DomainError(f"d must be >= 0, got {self.d}")
        if not 0.0 < self.eps <= 1.0:
            raise DomainError(f"eps must lie in (0, 1], got {self.eps}")
        if not self.alpha > 1.0:
            raise DomainError(f"alpha must be > 1, got {self.alpha}")
        if self.lambda_grid is not None:
            grid = tuple(float(x) for x in self.lambda_grid)
            if any(x <= 0 for x in grid):
                raise DomainError("lambda grid must be positive")
            object.__setattr__(self, "lambda_grid", grid)


def _lam_range(N):
    return 1.0, 10.0 * N


def unbiased_coefficient(lam, N):
    """lam / (N (1 - e^{-lam/N})), always in [1, (1 - lam/2N)^{-1}]."""
    return -(lam / N) / math.expm1(-lam / N)


def unbiased_bound(query, lam):
    """Bound on the expected risk at fixed lambda, d = KL (no confidence term).

    Returns (tight, linear) where tight = (1 - exp(-(lam q + d)/N)) / (1 - e^{-lam/N})
    and linear = lam/(N(1 - e^{-lam/N})) (q + d/lam) >= tight.
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    N, q, d = query.N, query.q, query.d
    tight = phi_inv(lam / N, q + d / lam)
    linear = unbiased_coefficient(lam, N) * (q + d / lam)
    return tight, linear


def _minimize(query, f):
    if query.lambda_grid:
        vals = [(f(l), l) for l in query.lambda_grid]
        return min(vals)
    return minimize_log(f, *_lam_range(query.N))


def optimized_unbiased_bound(query):
    """Tight unbiased bound at the approximately optimal lambda = sqrt(2Nd / (q(1-q))).

    For q in {0, 1} the lambda is found by minimization instead. Returns
    (bound, lambda_star).
    """
    N, q, d = query.N, query.q, query.d
    if d == 0.0:
        return q, 0.0
    if q in (0.0, 1.0):
        return _minimize(query, lambda l: unbiased_bound(query, l)[0])
    lam = math.sqrt(2 * N * d / (q * (1 - q)))
    return unbiased_bound(query, lam)[0], lam


def gaussian_bound(q, d, N):
    """B(q, d) if it is at most 1/2, else q + sqrt(d / 2N)."""
    b = (q + d / N + math.sqrt(2 * d * q * (1 - q) / N + d * d / N**2)) / (1 + 2 * d / N)
    if b <= 0.5:
        return b
    return q + math.sqrt(d / (2 * N))


def sqrt_bound(query):
    """Closed form of inf_lambda Phi^{-1}(q + d/lambda) through the Gaussian approximation."""
    return gaussian_bound(query.q, query.d, query.N)


def deviation_forms(query, kl, lam):
    """All three forms of the deviation bound at fixed lambda.

    Returns (tight, linear, second_order) with d = kl - log eps:
    tight = Phi^{-1}_{lam/N}(q + d/lam), linear = lam/(N(1-e^{-lam/N})) (q + d/lam),
    second_order = (q + d/lam) / (1 - lam/2N) (inf when lam >= 2N).
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    if kl < 0:
        raise DomainError("kl must be >= 0")
    N, q = query.N, query.q
    d = kl - math.log(query.eps)
    x = q + d / lam
    second = x / (1 - lam / (2 * N)) if lam < 2 * N else math.inf
    return phi_inv(lam / N, x), unbiased_coefficient(lam, N) * x, second


def deviation_bound(query, kl, lam):
    """Phi^{-1}_{lam/N}(q + (kl - log eps)/lam), valid with probability 1 - eps."""
    return deviation_forms(query, kl, lam)[0]


def optimized_deviation_bound(query, kl):
    """inf over lambda in [1, 10N] of deviation_bound.  Returns (bound, lambda_star).

    The infimum is not union-bounded; see uniform_deviation_bound for that.
    """
    return _minimize(query, lambda l: deviation_bound(query, kl, l))


def uniform_deviation_bound(query, kl):
    """Deviation bound made uniform over lambda = alpha^k <= 10N with weights 1/((k+1)(k+2)).

    Returns (bound, k_star). When q = 0 the answer is also compared with
    1 - exp(-(kl - log eps)/N).
    """
    N, q, a = query.N, query.q, query.alpha
    d = kl - math.log(query.eps)
    kmax = int(math.floor(math.log(10 * N) / math.log(a)))
    best = (math.inf, None)
    for k in range(kmax + 1):
        lam = a**k
        v = -math.expm1(-lam * q / N - (d + math.log((k + 1) * (k + 2))) / N) / -math.expm1(-lam / N)
        if v < best[0]:
            best = (v, k)
    if q == 0.0:
        zero = -math.expm1(-d / N)
        if zero < best[0]:
            best = (zero, None)
    return best


def empirical_dim_deviation(model, eps, lam, rho=None):
    """Deviation bound with the prior term replaced by the empirical dimension.

    Phi^{-1}_{lam/N}(ess inf r + (d_e/lam) log(e lam/d_e) + (K(rho, gibbs(lam)) - log eps)/lam).
    rho defaults to gibbs(lam), for which the KL term vanishes.
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    de = fm.empirical_dimension(model)
    k = 0.0 if rho is None else fm.kl(rho, fm.gibbs(model, lam))
    term = de / lam * math.log(math.e * lam / de) if de > 0 else 0.0
    return phi_inv(lam / model.N, model.min_risk() + term + (k - math.log(eps)) / lam)


def grid_minimum(f, lo, hi, points=100_000):
    """Dense geometric grid scan, used as an optimizer cross-check."""
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), points))
    vals = np.array([f(x) for x in grid])
    i = int(np.argmin(vals))
    return float(vals[i]), float(grid[i])
