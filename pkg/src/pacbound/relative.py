"""Relative bounds: risk differences between posteriors and Gibbs measures.

Contents: margin functions, the non-random and empirical relative bounds, the
solved relative deviation bound, the Gibbs-comparison bound B(rho, beta, gamma)
and the effective temperature it certifies, the KL-to-Gibbs bound, and the
posterior comparison bound with its chained (shortest path) version.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import finite_model as fm
from .errors import DomainError
from .kernels import f_gamma_alpha_inv, log_cosh, xi_map
from .local_bounds import _nonlinear_root


def theta_hat(model):
    """Index of the empirical risk minimizer in the prior support (lowest index on ties)."""
    r = np.where(model.support, model.risks, np.inf)
    return int(np.argmin(r))


@dataclass(frozen=True)
class Oracle:
    """True risk R over the hypotheses and, optionally, the true disagreement M'."""

    risk: np.ndarray
    disagreement: np.ndarray = None


def margin_function(model, x, mode="full", subset=None, oracle=None):
    """Margin function at x >= 0.

    mode "full": sup_theta m'(theta, theta_hat) - x (r(theta) - r(theta_hat)).
    mode "sub":  same supremum restricted to ``subset`` (a boolean mask or index list).
    mode "oracle": sup_theta M'(theta, theta_tilde) - x (R(theta) - R(theta_tilde)),
    theta_tilde the oracle risk minimizer. When the oracle has no disagreement
    matrix, the empirical m' stands in for M'.
    """
    if x < 0:
        raise DomainError("x must be >= 0")
    sup = model.support
    if mode == "oracle":
        if oracle is None:
            raise DomainError("oracle mode needs an Oracle")
        R = np.asarray(oracle.risk, dtype=float)
        ref = int(np.argmin(np.where(sup, R, np.inf)))
        D = model.disagreement() if oracle.disagreement is None else np.asarray(oracle.disagreement)
        vals = D[:, ref] - x * (R - R[ref])
        return float(np.max(vals[sup]))
    ref = theta_hat(model)
    r = model.risks
    vals = model.disagreement()[:, ref] - x * (r - r[ref])
    if mode == "full":
        mask = sup
    elif mode == "sub":
        if subset is None:
            raise DomainError("sub mode needs a subset")
        mask = _mask(model, subset) & sup
        if not mask.any():
            raise DomainError("empty subset")
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return float(np.max(vals[mask]))


def _mask(model, subset):
    s = np.asarray(subset)
    if s.dtype == bool:
        if s.shape != (model.H,):
            raise DomainError("subset mask has the wrong length")
        return s
    mask = np.zeros(model.H, bool)
    mask[s.astype(int)] = True
    return mask


def nonrandom_relative(kappa, c, d, N, inf_risk=0.0):
    """Non-random rate under a margin assumption with exponent kappa >= 1 and constant c.

    Returns (bound, lambda_bar): the bound on the expected risk of the Gibbs
    posterior at inverse temperature lambda_bar.
    """
    if kappa < 1:
        raise DomainError("kappa must be >= 1")
    if c <= 0:
        raise DomainError("c must be positive")
    e = 2 * kappa - 1
    lam = 0.5 * (8 * math.log(2) * d) ** ((kappa - 1) / e) * (kappa * c) ** (1 / e) * N ** (kappa / e)
    rate = (2 - 1 / kappa) * (kappa * c) ** (-1 / e) * (8 * math.log(2) * d / N) ** (kappa / e)
    return inf_risk + rate, lam


def oracle_dimension(model, oracle):
    """sup_gamma gamma [pi_{exp(-gamma R)}(R) - inf R], the parametric constant d."""
    return fm.sup_excess(model, np.asarray(oracle.risk, dtype=float))


def empirical_relative(model, x, alpha, lam, rho=None, subset=None):
    """Empirical bound on E[rho(R)] - inf over the subset of R (an expectation bound).

    With S = N sinh(lam/N), T = tanh(lam/2N) and D = S (1 - x T) - alpha > 0:
    [1 - (S(1 - xT) - lam)/D] (rho(r) - r(theta_hat)) + K(rho, gibbs(alpha))/D
    + S T / D [phibar(x) + phitilde((lam - alpha)/(S T))].
    rho defaults to gibbs(alpha); subset defaults to every hypothesis.
    """
    N = model.N
    S = N * math.sinh(lam / N)
    T = math.tanh(lam / (2 * N))
    D = S * (1 - x * T) - alpha
    if not D > 0:
        raise DomainError("need alpha < N sinh(lam/N) (1 - x tanh(lam/2N))")
    if alpha < 0 or x < 0:
        raise DomainError("alpha and x must be >= 0")
    post = fm.gibbs(model, alpha) if rho is None else rho
    r_hat = model.risks[theta_hat(model)]
    excess = post.mean(model.risks) - r_hat
    k = fm.kl(post, fm.gibbs(model, alpha))
    phibar = margin_function(model, x)
    y = (lam - alpha) / (S * T)
    phitil = margin_function(model, y, "sub", subset) if subset is not None else margin_function(model, y)
    return (1 - (S * (1 - x * T) - lam) / D) * excess + k / D + S * T / D * (phibar + phitil)


def relative_root(lam, beta, B):
    """Solved form of the relative deviation bound; never larger than B."""
    return _nonlinear_root(lam, beta, B)


def _relative_temperature(t, x, N):
    return N / 2 * (math.log((1 + t) / (1 - t)) - x * math.log1p(-t * t))


def relative_deviation(model, eps, lam, beta, x, rho=None, subset=None):
    """Relative deviation bound on rho(R) - inf over the subset of R, parameters 0 <= beta < lam < 1.

    Returns (nonlinear, B). rho defaults to the Gibbs measure at the upper
    integration limit, where its KL term vanishes.
    """
    if not 0 <= beta < lam < 1:
        raise DomainError("need 0 <= beta < lambda < 1")
    if x < 0:
        raise DomainError("x must be >= 0")
    N = model.N
    hi = _relative_temperature(lam, x, N)
    lo = _relative_temperature(beta, x, N)
    r_hat = model.risks[theta_hat(model)]
    integral = fm.gibbs_risk_integral(model, lo, hi) - (hi - lo) * r_hat
    post = fm.gibbs(model, hi) if rho is None else rho
    k = fm.kl(post, fm.gibbs(model, hi))
    log_prod = math.log1p(-lam * lam) + math.log1p(-beta * beta)
    y = math.log((1 + lam) * (1 - beta) / ((1 - lam) * (1 + beta))) / -log_prod
    phibar = margin_function(model, x)
    phitil = margin_function(model, y, "sub", subset) if subset is not None else margin_function(model, y)
    B = (integral + k - 2 * math.log(eps)) / (N * (lam - beta)) - log_prod / (2 * (lam - beta)) * (phibar + phitil)
    return relative_root(lam, beta, B), B


# Gibbs comparison and effective temperature


def geometric_atoms(N, ratio=2.0):
    """Atoms ratio^k, 0 <= k < log N / log ratio, each with weight log(ratio)/log(ratio N)."""
    kmax = math.ceil(math.log(N) / math.log(ratio))
    w = math.log(ratio) / math.log(ratio * N)
    return {ratio**k: w for k in range(kmax)}


def harmonic_atoms(ratio, count):
    """Atoms ratio^k with weights 1/((k+1)(k+2)), k < count."""
    return {ratio**k: 1.0 / ((k + 1) * (k + 2)) for k in range(count)}


@dataclass(frozen=True)
class GibbsComparison:
    bound: float
    risk_difference: float
    lambda1: float
    lambda2: float


@dataclass
class TemperatureEstimate:
    beta_hat: float
    gamma_star: float
    grid: list = field(default_factory=list)
    certificate: dict = field(default_factory=dict)


def _atom_weight(nu, x):
    for a, w in nu.items():
        if math.isclose(a, x, rel_tol=1e-12, abs_tol=0.0):
            return w
    return 0.0


def comparison_grids(model, beta, gamma, points=64):
    """Default inner grids for (lambda1, lambda2)."""
    N = model.N
    c = beta * gamma / (N * math.tanh(gamma / N))
    l1 = np.unique(np.append(np.geomspace(max(beta / 4, 1e-6), gamma, points), gamma))
    l1 = l1[l1 <= gamma]
    lo = max(c * (1 + 1e-9), beta / 4)
    hi = max(4 * gamma, 4 * lo)
    l2 = np.geomspace(lo, hi, points)
    return l1, l2


class _GibbsCache:
    """Per-model cache of Gibbs log weights, risks and disagreement vectors, one row per lambda."""

    def __init__(self, model):
        self.model = model
        self._rows = {}
        self._D = model.disagreement()

    def _fill(self, lams):
        missing = [l for l in lams if l not in self._rows]
        if not missing:
            return
        m = self.model
        lw = np.array([fm._as_model_weights(m, l) for l in missing])
        lw -= logsumexp(lw, axis=1, keepdims=True)
        p = np.exp(lw)
        risk = p @ m.risks
        g = p @ self._D.T
        for i, l in enumerate(missing):
            self._rows[l] = (lw[i], risk[i], g[i])

    def matrices(self, lams):
        """(log weights, Gibbs risks, expected disagreement vectors) stacked over ``lams``."""
        lams = [float(l) for l in lams]
        self._fill(lams)
        rows = [self._rows[l] for l in lams]
        return (np.array([r[0] for r in rows]), np.array([r[1] for r in rows]),
                np.array([r[2] for r in rows]))


def _kl_rows(rho, log_post):
    """K(rho, .) against every row of a matrix of normalized log weights."""
    a = rho.log_weights
    mask = np.isfinite(a)
    b = log_post[:, mask]
    out = np.exp(a[mask]) @ (a[mask][:, None] - b.T)
    out = np.maximum(out, 0.0)
    out[~np.all(np.isfinite(b), axis=1)] = np.inf
    return out


def gibbs_comparison(model, eps, nu, rho, beta, gamma, lambda1_grid=None, lambda2_grid=None, _cache=None):
    """Bound B(rho, beta, gamma) on F_{gamma,beta}(rho(R) - pi_{exp(-beta R)}(R)).

    nu maps atoms to weights; B is +inf when beta or gamma carries no weight.
    The infimum over lambda1 <= gamma and lambda2 > beta gamma / (N tanh(gamma/N))
    is taken over geometric grids. The implied bound on the risk difference is
    F^{-1}_{gamma,beta}(B) when B >= 0 and B / (N tanh(gamma/N) - beta) otherwise.
    """
    N = model.N
    if beta <= 0 or gamma <= 0:
        raise DomainError("beta and gamma must be positive")
    wb, wg = _atom_weight(nu, beta), _atom_weight(nu, gamma)
    if wb == 0 or wg == 0:
        return GibbsComparison(math.inf, math.inf, math.nan, math.nan)
    cache = _cache or _GibbsCache(model)
    if lambda1_grid is None or lambda2_grid is None:
        g1, g2 = comparison_grids(model, beta, gamma)
        lambda1_grid = g1 if lambda1_grid is None else lambda1_grid
        lambda2_grid = g2 if lambda2_grid is None else lambda2_grid
    l1 = np.asarray(lambda1_grid, dtype=float)
    l2 = np.asarray(lambda2_grid, dtype=float)
    c = beta * gamma / (N * math.tanh(gamma / N))
    if np.any(l1 > gamma) or np.any(l1 < 0) or np.any(l2 <= c):
        raise DomainError("need 0 <= lambda1 <= gamma and lambda2 > beta gamma / (N tanh(gamma/N))")
    xi = N * log_cosh(gamma / N)
    pen = -math.log(eps * wb * wg)
    g_rho = fm.expected_disagreement(model, rho)
    rho_r = rho.mean(model.risks)
    lw1, _, _ = cache.matrices(l1)
    A = _kl_rows(rho, lw1) + logsumexp(lw1 + xi * g_rho, axis=1) + pen
    lw2, risk2, g2 = cache.matrices(l2)
    y = logsumexp(lw2 + xi * g2, axis=1) + pen
    inv = np.array([f_gamma_alpha_inv(gamma, beta * gamma / b, N, v) for b, v in zip(l2, y)])
    C = rho_r - risk2 + beta / l2 * inv
    total = A[:, None] + (gamma - l1)[:, None] * C[None, :]
    i, j = np.unravel_index(int(np.argmin(total)), total.shape)
    B = float(total[i, j])
    slope = N * math.tanh(gamma / N) - beta
    if B >= 0 and slope > 0:
        diff = f_gamma_alpha_inv(gamma, beta, N, B)
    elif slope > 0:
        diff = B / slope
    else:
        diff = math.inf
    return GibbsComparison(B, diff, float(l1[i]), float(l2[j]))


def effective_temperature(model, eps, rho, nu=None, _cache=None):
    """Largest atom beta for which some gamma with N tanh(gamma/N) > beta gives B <= 0.

    Returns a TemperatureEstimate; beta_hat = 0 means no certificate was found.
    """
    N = model.N
    if nu is None:
        nu = geometric_atoms(N)
    cache = _cache or _GibbsCache(model)
    atoms = sorted(a for a, w in nu.items() if w > 0)
    searched = []
    for beta in reversed(atoms):
        for gamma in atoms:
            if not N * math.tanh(gamma / N) > beta:
                continue
            res = gibbs_comparison(model, eps, nu, rho, beta, gamma, _cache=cache)
            searched.append((beta, gamma, res.bound))
            if res.bound <= 0:
                return TemperatureEstimate(beta, gamma, searched,
                                           {"B": res.bound, "lambda1": res.lambda1, "lambda2": res.lambda2})
    return TemperatureEstimate(0.0, math.nan, searched, {})


def kl_to_gibbs(model, eps, rho, beta, gamma):
    """Upper bound on K(rho, pi_{exp(-beta R)}), for beta < N tanh(gamma/N)."""
    N = model.N
    t = math.tanh(gamma / N)
    s = beta / (N * t)
    if not 0 <= s < 1:
        raise DomainError("need 0 <= beta < N tanh(gamma/N)")
    c = gamma * s
    post = fm.gibbs(model, c)
    mgf = fm.mgf_pair(model, c, rho, beta * log_cosh(gamma / N) / t)
    return (fm.kl(rho, post) - s * math.log(eps) + mgf) / (1 - s)


# Posterior comparison


@dataclass(frozen=True)
class ComparisonGrid:
    """Grids for the posterior comparison bound.

    nu: atom -> weight for lambda, beta and gamma; priors: list of
    (boolean mask, mu weight) pairs defining the conditional priors pi^i.
    """

    nu: dict
    priors: tuple

    @classmethod
    def default(cls, model, ratio=2.0):
        nu = geometric_atoms(model.N, ratio)
        if model.submodel_index is None:
            priors = ((np.ones(model.H, bool), 1.0),)
        else:
            priors = []
            total = 0.0
            for s in model.submodels():
                mask = model.submodel_index == s
                mass = float(np.exp(logsumexp(model.prior_log_weights[mask])))
                priors.append((mask, mass))
                total += mass
            priors = tuple((m, w / total) for m, w in priors)
        return cls(nu, priors)


def _posterior_terms(model, rho, grid):
    """T[p] and log-weight arrays over (beta < gamma, prior) combinations."""
    N = model.N
    g = fm.expected_disagreement(model, rho)
    atoms = sorted(a for a, w in grid.nu.items() if w > 0)
    T, c, L = [], [], []
    for mask, mu in grid.priors:
        if mu <= 0:
            continue
        sub = model.restrict(mask)
        for beta, gamma in itertools.combinations(atoms, 2):
            post = fm.gibbs(sub, beta)
            k = fm.kl(rho, post)
            mgf = float(logsumexp(post.log_weights + beta * N / gamma * log_cosh(gamma / N) * g))
            T.append((k + mgf) / (1 - beta / gamma))
            c.append(beta / (gamma - beta))
            L.append(math.log(grid.nu[beta]) + math.log(grid.nu[gamma]) + math.log(mu))
    return np.array(T), np.array(c), np.array(L)


def compare_posteriors(model, eps, rho1, rho2, grid=None):
    """Bound B(rho1, rho2) on rho2(R) - rho1(R), minimized over the grids."""
    if grid is None:
        grid = ComparisonGrid.default(model)
    return _compare(model, eps, rho1, rho2, grid, _posterior_terms(model, rho1, grid),
                    _posterior_terms(model, rho2, grid))


def _compare(model, eps, rho1, rho2, grid, terms1, terms2):
    N = model.N
    T1, c1, L1 = terms1
    T2, c2, L2 = terms2
    if T1.size == 0 or T2.size == 0:
        return math.inf
    D = model.disagreement()
    cross = float(rho1.probs @ D @ rho2.probs)
    diff = rho2.mean(model.risks) - rho1.mean(model.risks)
    factor = c1[:, None] + c2[None, :] + 1.0
    logs = L1[:, None] + L2[None, :]
    base = T1[:, None] + T2[None, :]
    best = math.inf
    for lam, wl in grid.nu.items():
        if wl <= 0:
            continue
        lg = logs + math.log(wl) + math.log(eps / 3)
        inner = diff + N / lam * log_cosh(lam / N) * cross + (base - factor * lg) / lam
        q = float(np.min(inner))
        best = min(best, xi_map(lam / N, q))
    return best


@dataclass
class ChainedBound:
    direct: np.ndarray
    chained: np.ndarray
    negative_cycle: bool


def chained_bound(model, eps, posteriors, grid=None):
    """Pairwise bounds over a finite set of posteriors and their shortest-path closure.

    chained[i, j] is the minimum over paths with at least one step of the sum of
    direct bounds, so it is subadditive. A negative diagonal entry signals a
    negative cycle, which can only happen on the low-probability event where
    the bounds fail; it is reported through ``negative_cycle``.
    """
    if grid is None:
        grid = ComparisonGrid.default(model)
    n = len(posteriors)
    terms = [_posterior_terms(model, p, grid) for p in posteriors]
    B = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            B[i, j] = _compare(model, eps, posteriors[i], posteriors[j], grid, terms[i], terms[j])
    Bt = B.copy()
    for k in range(n):
        Bt = np.minimum(Bt, Bt[:, k:k + 1] + Bt[k:k + 1, :])
    return ChainedBound(B, Bt, bool(np.any(np.diag(Bt) < 0)))


def default_chain_set(model, lambdas):
    """Gibbs posteriors of every submodel prior at each lambda."""
    out = []
    ids = model.submodels()
    for s in ids:
        sub = model if model.submodel_index is None else model.restrict(model.submodel_index == s)
        for lam in lambdas:
            out.append(fm.gibbs(sub, lam))
    return out
