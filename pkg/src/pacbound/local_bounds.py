"""Localized bounds: the prior is replaced by a Gibbs measure of the empirical risk.

Also includes the non-random bound driven by an oracle risk vector (synthetic
experiments) and the partially local bound over a union of submodels.
"""

import math
import warnings
from collections import namedtuple
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import finite_model as fm
from .errors import DomainError
from .kernels import phi_tilde_inv


@dataclass(frozen=True)
class LocalBoundQuery:
    """Localization parameters.

    alpha, gamma in [0, 1) with gamma < alpha drive ``local_deviation``;
    beta, lam drive ``local_unbiased``.
    """

    model: fm.FiniteHypothesisClass
    eps: float = 0.01
    alpha: float = None
    gamma: float = None
    beta: float = None
    lam: float = None

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise DomainError(f"eps must lie in (0, 1], got {self.eps}")


def _check_alpha_gamma(alpha, gamma):
    if alpha is None or gamma is None:
        raise DomainError("alpha and gamma are required")
    if not 0.0 <= gamma < alpha < 1.0:
        raise DomainError(f"need 0 <= gamma < alpha < 1, got alpha={alpha}, gamma={gamma}")


LocalUnbiased = namedtuple("LocalUnbiased", "simple tight linear lower")


def local_unbiased(query, rho=None):
    """Expected-risk bounds for a posterior compared with the localized prior gibbs(beta).

    rho defaults to gibbs(beta). With x = rho(r) + K(rho, gibbs(beta)) / (lam - beta)
    and lam defaulting to 2 beta:
    tight = inverse of phi_tilde at a = lam/N, b = beta/lam, evaluated at x;
    linear = (lam - beta) / (N (1 - e^{-lam/N}) - beta) x;
    simple = (rho(r) + K/beta) / (1 - 2 beta/N), defined for 0 < beta < N/2;
    lower = rho(r) - K/beta (the lower bound, rho(r) when beta = 0).
    """
    m = query.model
    N = m.N
    beta = query.beta
    if beta is None or beta < 0:
        raise DomainError("beta must be >= 0")
    lam = 2 * beta if query.lam is None else query.lam
    if lam <= 0:
        raise DomainError("lambda must be positive (beta = 0 needs an explicit lambda)")
    scale = N * -math.expm1(-lam / N)
    if beta >= scale:
        raise DomainError("need beta < N (1 - exp(-lambda/N))")
    post = fm.gibbs(m, beta) if rho is None else rho
    k = fm.kl(post, fm.gibbs(m, beta))
    risk = post.mean(m.risks)
    x = risk + k / (lam - beta)
    tight = phi_tilde_inv(lam / N, beta / lam, x)
    linear = (lam - beta) / (scale - beta) * x
    if 0 < beta < N / 2:
        simple = (risk + k / beta) / (1 - 2 * beta / N)
    else:
        simple = math.inf
    lower = risk - k / beta if beta > 0 else risk
    return LocalUnbiased(simple, tight, linear, lower)


def _nonlinear_root(a, g, M):
    """(a - g)/(2ag) (sqrt(1 + 4ag/(a-g)^2 (1 - exp(-(a-g) M))) - 1), the solved quadratic."""
    if a * g == 0.0:
        return M
    c = a - g
    return c / (2 * a * g) * (math.sqrt(1 + 4 * a * g / c**2 * -math.expm1(-c * M)) - 1)


def local_deviation(query, rho=None):
    """Localized deviation bound with alpha = 1 - e^{-lam/N}, gamma = e^{beta/N} - 1.

    rho defaults to gibbs(lam) with lam = -N log(1 - alpha). Returns
    (nonlinear, linear, M) with nonlinear <= linear = M.
    """
    _check_alpha_gamma(query.alpha, query.gamma)
    m = query.model
    N, a, g = m.N, query.alpha, query.gamma
    lam = -N * math.log1p(-a)
    beta = N * math.log1p(g)
    post = fm.gibbs(m, lam) if rho is None else rho
    integral = fm.gibbs_risk_integral(m, beta, lam)
    k = fm.kl(post, fm.gibbs(m, lam))
    M = (k + integral - 2 * math.log(query.eps)) / (N * (a - g))
    return _nonlinear_root(a, g, M), M, M


def local_deviation_from_dimension(N, de, ess_inf, eps, alpha, gamma, kl=0.0):
    """Formula-level version of ``local_deviation``.

    The Gibbs-risk integral is replaced by its upper bound
    (lam - beta) ess_inf + de log(lam / beta). Returns (nonlinear, linear).
    """
    _check_alpha_gamma(alpha, gamma)
    lam = -N * math.log1p(-alpha)
    beta = N * math.log1p(gamma)
    if beta <= 0:
        raise DomainError("gamma must be positive for the dimension form")
    integral = (lam - beta) * ess_inf + de * math.log(lam / beta)
    M = (kl + integral - 2 * math.log(eps)) / (N * (alpha - gamma))
    return _nonlinear_root(alpha, gamma, M), M


def local_corollary(model, eps, beta, rho=None):
    """Linear localized bound at lam = 2 beta for rho = gibbs(2 beta) by default.

    [int_beta^{2beta} pi_{exp(-xi r)}(r) dxi + K(rho, gibbs(2beta)) - 2 log eps]
    / (N [2 - e^{beta/N} - e^{-2beta/N}]).
    """
    N = model.N
    denom = N * (2 - math.exp(beta / N) - math.exp(-2 * beta / N))
    if denom <= 0:
        raise DomainError("beta too large: denominator not positive")
    post = fm.gibbs(model, 2 * beta) if rho is None else rho
    k = fm.kl(post, fm.gibbs(model, 2 * beta))
    return (fm.gibbs_risk_integral(model, beta, 2 * beta) + k - 2 * math.log(eps)) / denom


def local_corollary_from_dimension(N, de, ess_inf, eps, beta, kl=0.0):
    """``local_corollary`` with the integral replaced by beta ess_inf + de log 2."""
    denom = N * (2 - math.exp(beta / N) - math.exp(-2 * beta / N))
    if denom <= 0:
        raise DomainError("beta too large: denominator not positive")
    return (beta * ess_inf + de * math.log(2) + kl - 2 * math.log(eps)) / denom


def nonrandom_rate(d_eta, ess_inf, eta, N):
    """ess inf R + eta + 4d/N + 2 sqrt(2d(ess inf R + eta)/N + 4d^2/N^2)."""
    base = ess_inf + eta
    return base + 4 * d_eta / N + 2 * math.sqrt(2 * d_eta * base / N + 4 * d_eta**2 / N**2)


def nonrandom_local(model, oracle, eta=0.0):
    """Dimension d_eta of the oracle risk and the resulting non-random Gibbs bound.

    d_eta = sup_beta beta [pi_{exp(-beta R)}(R) - ess inf R - eta] (floored at 0).
    Returns (d_eta, bound).
    """
    R = np.asarray(oracle, dtype=float)
    if R.shape != (model.H,):
        raise DomainError("oracle risk must have one value per hypothesis")
    if eta < 0:
        raise DomainError("eta must be >= 0")
    d = fm.sup_excess(model, R, eta)
    ess = float(R[model.support].min())
    return d, nonrandom_rate(d, ess, eta, model.N)


def _submodel_integrals(model, lam, beta):
    ids, integrals, masses = [], [], []
    all_ids = [0] if model.submodel_index is None else [int(i) for i in np.unique(model.submodel_index)]
    for s in all_ids:
        mask = model.submodel_index == s if model.submodel_index is not None else np.ones(model.H, bool)
        mass = logsumexp(np.where(mask, model.prior_log_weights, -np.inf))
        if not np.isfinite(mass):
            warnings.warn(f"submodel {s} carries no prior mass and is skipped")
            continue
        sub = model.restrict(mask)
        ids.append(s)
        integrals.append(fm.gibbs_risk_integral(sub, beta, lam))
        masses.append(mass)
    return ids, np.array(integrals), np.array(masses)


def partially_local(model, eps, alpha, gamma, submodel_weights=None, nu=None):
    """Partially local bound over the union of submodels.

    Within submodel m the posterior is the Gibbs measure of the conditional
    prior at lam = -N log(1 - alpha). ``submodel_weights`` is the prior mu on
    submodels (default: prior mass of each submodel). ``nu`` is the posterior on
    submodels; by default the optimal nu proportional to mu exp(-I_m / 2), with
    I_m the Gibbs-risk integral of submodel m, is used, which gives
    numerator -2 log sum_m mu_m exp(-I_m/2) - 2 log eps.
    Returns (nonlinear, linear).
    """
    _check_alpha_gamma(alpha, gamma)
    N = model.N
    lam = -N * math.log1p(-alpha)
    beta = N * math.log1p(gamma)
    ids, I, log_mass = _submodel_integrals(model, lam, beta)
    if submodel_weights is None:
        log_mu = log_mass - logsumexp(log_mass)
    else:
        w = np.array([submodel_weights[s] for s in ids], dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise DomainError("submodel weights must be non-negative with positive total")
        with np.errstate(divide="ignore"):
            log_mu = np.log(w) - math.log(w.sum())
    if nu is None:
        num = -2 * logsumexp(log_mu - I / 2)
    else:
        v = np.array([nu[s] for s in ids], dtype=float)
        if np.any(v < 0) or v.sum() <= 0:
            raise DomainError("nu must be non-negative with positive total")
        v = v / v.sum()
        mask = v > 0
        if np.any(~np.isfinite(log_mu[mask])):
            return math.inf, math.inf
        kl_nu = float(np.sum(v[mask] * (np.log(v[mask]) - log_mu[mask])))
        num = float(np.dot(v, I)) + 2 * kl_nu
    M = (num - 2 * math.log(eps)) / (N * (alpha - gamma))
    return _nonlinear_root(alpha, gamma, M), M


def optimal_nu(model, alpha, gamma, submodel_weights=None):
    """The minimizing submodel posterior, as a dict submodel id -> weight."""
    N = model.N
    lam = -N * math.log1p(-alpha)
    beta = N * math.log1p(gamma)
    ids, I, log_mass = _submodel_integrals(model, lam, beta)
    if submodel_weights is None:
        log_mu = log_mass - logsumexp(log_mass)
    else:
        with np.errstate(divide="ignore"):
            w = np.array([submodel_weights[s] for s in ids], dtype=float)
            log_mu = np.log(w) - math.log(w.sum())
    lw = log_mu - I / 2
    p = np.exp(lw - logsumexp(lw))
    return dict(zip(ids, p.tolist()))
