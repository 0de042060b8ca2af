"""Transductive (shadow sample) bounds and the inductive Vapnik-type bounds derived from them."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .kernels import a_of_lambda, phi_inv
from .nonlocal_bounds import gaussian_bound
from .optimize import minimize_log

# Registered value of d''_k - d'_k for the packaged eta sequence, by sample size cap.
SLACK_TABLE = ((10**3, 3.7), (10**6, 4.4), (10**9, 4.7))


def slack(N):
    """Additive complexity slack for the two-point eta sequence (1/log(10N), 1/(10N))."""
    for cap, value in SLACK_TABLE:
        if N <= cap:
            return value
    raise DomainError(f"no registered slack for N > {SLACK_TABLE[-1][0]}")


def slack_formula(N, eps):
    """The exact quantity the registered slack rounds up.

    log 2 + log log(10N) + 1 - log log(10N) / log(10N) - log(20N/eps) / (10N).
    """
    L = math.log(10 * N)
    return math.log(2) + math.log(L) + 1 - math.log(L) / L - math.log(20 * N / eps) / (10 * N)


@dataclass(frozen=True)
class VapnikQuery:
    """N training size, r1 training risk, h VC dimension or compression size, eps confidence."""

    N: int
    r1: float
    h: float
    eps: float = 0.01
    k_grid: tuple = tuple(range(1, 65))
    alpha: float = 1.1
    eta_seq: tuple = None
    complexity_override: float = None

    def __post_init__(self):
        if self.N < 1:
            raise DomainError("N must be >= 1")
        if not 0.0 <= self.r1 <= 1.0:
            raise DomainError(f"r1 must lie in [0, 1], got {self.r1}")
        if self.h < 0:
            raise DomainError("h must be >= 0")
        if not 0.0 < self.eps <= 1.0:
            raise DomainError(f"eps must lie in (0, 1], got {self.eps}")
        if not self.alpha > 1.0:
            raise DomainError("alpha must be > 1")
        if any(int(k) != k or k < 1 for k in self.k_grid):
            raise DomainError("k grid must hold positive integers")
        if self.eta_seq is None:
            object.__setattr__(self, "eta_seq", (1 / math.log(10 * self.N), 1 / (10 * self.N)))

    @property
    def eta(self):
        return self.eta_seq[-1]


@dataclass(frozen=True)
class ComplexityTerm:
    value: float
    kind: str = "vc"


def complexity(kind, h, N, k, eps, extra_logs=0.0):
    """h log(e (k+1) N / h) - log eps + extra_logs (the h log term is 0 when h = 0)."""
    if kind not in ("vc", "compression", "user"):
        raise DomainError(f"unknown complexity kind {kind!r}")
    if h < 0 or h > (k + 1) * N:
        raise DomainError("need 0 <= h <= (k+1) N")
    base = h * math.log(math.e * (k + 1) * N / h) if h > 0 else 0.0
    return ComplexityTerm(base - math.log(eps) + extra_logs, kind)


def _d(query, k, extra=0.0):
    if query.complexity_override is not None:
        return query.complexity_override - math.log(query.eps) + extra
    return complexity("vc", query.h, query.N, k, query.eps, extra).value


def _lam_max(N):
    return 10.0 * N


def transductive_bound(query, k, d=None):
    """Bound on the shadow-sample risk: (k+1)/k inf_lam Phi^{-1}_{lam/N}(r1 + d/lam) - r1/k.

    d defaults to complexity(h, N, k, eps). Returns (bound, lambda_star).
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    N, r1 = query.N, query.r1
    d = _d(query, k) if d is None else d
    if d == 0 and r1 == 0:
        return 0.0, math.nan
    f = lambda lam: (k + 1) / k * phi_inv(lam / N, r1 + d / lam) - r1 / k
    return minimize_log(f, 1.0, _lam_max(N), points=481)


def transductive_bound_k1(query):
    """Shadow sample of the same size: 2 inf_lam (r1 + d/lam) / (1 - A(lam)) - r1.

    d = h log(2eN/h) - log eps. Returns (bound, lambda_star).
    """
    N, r1 = query.N, query.r1
    d = _d(query, 1)
    if d == 0 and r1 == 0:
        return 0.0, math.nan

    def f(lam):
        den = 1 - a_of_lambda(lam, N)
        return 2 * (r1 + d / lam) / den - r1 if den > 0 else math.inf

    return minimize_log(f, 1.0, _lam_max(N), points=481)


def exchangeable_bound(query):
    """Exchangeable-sample bound: inf_lam [r1 (1 + A) + 2d/lam] / [1 - A (1 - 2 r1)].

    Returns (bound, lambda_star).
    """
    N, r1 = query.N, query.r1
    d = _d(query, 1)
    if d == 0 and r1 == 0:
        return 0.0, math.nan

    def f(lam):
        A = a_of_lambda(lam, N)
        den = 1 - A * (1 - 2 * r1)
        return (r1 * (1 + A) + 2 * d / lam) / den if den > 0 else math.inf

    return minimize_log(f, 1.0, _lam_max(N), points=481)


@dataclass(frozen=True)
class InductiveResult:
    bound: float
    k_star: int
    lambda_star: float


def inductive_bound(query, slack_value=None):
    """Inductive bound from the shadow sample argument.

    min over k and lambda of (k+1)/k Phi^{-1}_{lam/N}(r1 + eta(1 - r1) + [d'_k + s + log(k(k+1))]/lam) - r1/k,
    with d'_k = complexity(h, N, k, eps) and s the registered slack.
    """
    N, r1, eta = query.N, query.r1, query.eta
    s = slack(N) if slack_value is None else slack_value
    best = InductiveResult(math.inf, None, math.nan)
    for k in query.k_grid:
        d = _d(query, k, s + math.log(k * (k + 1)))
        base = r1 + eta * (1 - r1)
        if d == 0 and base == 0:
            return InductiveResult(0.0, k, math.nan)
        f = lambda lam: (k + 1) / k * phi_inv(lam / N, base + d / lam) - r1 / k
        v, lam = minimize_log(f, 1.0, _lam_max(N), points=241)
        if v < best.bound:
            best = InductiveResult(v, k, lam)
    return best


def inductive_bound_gaussian(query, slack_value=None):
    """Gaussian approximation of ``inductive_bound``: (k+1)/k Bbar(r1 + eta, d''_k + log(k(k+1))) - r1/k."""
    N, r1, eta = query.N, query.r1, query.eta
    s = slack(N) if slack_value is None else slack_value
    best = InductiveResult(math.inf, None, math.nan)
    for k in query.k_grid:
        d = _d(query, k, s + math.log(k * (k + 1)))
        v = (k + 1) / k * gaussian_bound(r1 + eta, d, N) - r1 / k
        if v < best.bound:
            best = InductiveResult(v, k, math.nan)
    return best


def inductive_bound_grid(query):
    """Union bound over lambda = alpha^j and k with weights 1/(k(k+1)) and 1/(j(j+1)).

    min over k, j of [1 - exp(-alpha^j r1/N - (d'_k + log(k(k+1)j(j+1)))/N)]
    / [k/(k+1) (1 - exp(-alpha^j/N))] - r1/k, with alpha^j <= 10N.
    """
    N, r1, a = query.N, query.r1, query.alpha
    jmax = int(math.floor(math.log(_lam_max(N)) / math.log(a)))
    j = np.arange(1, jmax + 1, dtype=float)
    lam = a**j
    best = InductiveResult(math.inf, None, math.nan)
    for k in query.k_grid:
        d = _d(query, k, math.log(k * (k + 1))) + np.log(j * (j + 1))
        v = -np.expm1(-lam * r1 / N - d / N) / (k / (k + 1) * -np.expm1(-lam / N)) - r1 / k
        i = int(np.argmin(v))
        if v[i] < best.bound:
            best = InductiveResult(float(v[i]), k, float(lam[i]))
    return best


def _d_iid(query, s):
    if query.complexity_override is not None:
        return query.complexity_override - math.log(query.eps) + s
    h, N = query.h, query.N
    base = h * math.log(2 * math.e * N / h) if h > 0 else 0.0
    return base - math.log(query.eps) + s


def inductive_bound_k1_iid(query, slack_value=None):
    """i.i.d. bounds with a shadow sample of size N.

    exact = inf_lam [(1 + A) r1 + 2 d''/lam + 2 eta (1 - r1)] / [1 - A (1 - 2 r1)];
    gaussian = r1 + d''(1 - 2r1)/N + 2eta + sqrt(4d''(1-r1)r1/N + d''^2 (1-2r1)^2/N^2 + 4d''(1-2r1)eta/N).
    Returns (exact, lambda_star, gaussian).
    """
    N, r1, eta = query.N, query.r1, query.eta
    s = slack(N) if slack_value is None else slack_value
    d = _d_iid(query, s)

    def f(lam):
        A = a_of_lambda(lam, N)
        den = 1 - A * (1 - 2 * r1)
        return ((1 + A) * r1 + 2 * d / lam + 2 * eta * (1 - r1)) / den if den > 0 else math.inf

    if d == 0 and eta == 0:
        exact, lam = r1, math.nan
    else:
        exact, lam = minimize_log(f, 1.0, _lam_max(N), points=481)
    u = 1 - 2 * r1
    gauss = r1 + d * u / N + 2 * eta + math.sqrt(4 * d * (1 - r1) * r1 / N + d * d * u * u / N**2 + 4 * d * u * eta / N)
    return exact, lam, gauss


def vapnik_classical(query):
    """r1 + 2 d_V/N + sqrt(4 d_V r1/N + 4 d_V^2/N^2), d_V = h log(2eN/h) + log(4/eps)."""
    N, r1, h = query.N, query.r1, query.h
    if query.complexity_override is not None:
        dv = query.complexity_override + math.log(4 / query.eps)
    else:
        dv = (h * math.log(2 * math.e * N / h) if h > 0 else 0.0) + math.log(4 / query.eps)
    return r1 + 2 * dv / N + math.sqrt(4 * dv * r1 / N + 4 * dv * dv / N**2)


def gaussian_approximation_gap(a, p):
    """p - Phi_a(p) and its bound: a p (1-p)/2 for p <= 1/2, a/8 otherwise."""
    from .kernels import phi
    gap = p - phi(a, p)
    bound = a * p * (1 - p) / 2 if p <= 0.5 else a / 8
    return gap, bound
