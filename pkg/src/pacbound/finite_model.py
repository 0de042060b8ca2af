"""Exact Gibbs posterior computations over a finite weighted hypothesis class.

A model is a prior over H hypotheses plus an N x H binary loss matrix. Every
Gibbs quantity (partition function, posterior risk, KL divergences, pairwise
disagreement moments) is computed exactly with log-sum-exp.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import DomainError, IngestionError

# The geometric grid used for suprema over inverse temperatures.
BETA_RATIO = 1.05
BETA_MIN = 1e-3


@dataclass(frozen=True)
class PosteriorWeights:
    """Normalized log weights over the hypotheses of a model."""

    log_weights: np.ndarray

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=float)
        lw = lw - logsumexp(lw)
        lw.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)

    @property
    def probs(self):
        return np.exp(self.log_weights)

    @classmethod
    def from_probs(cls, probs):
        p = np.asarray(probs, dtype=float)
        if np.any(p < 0) or p.sum() <= 0:
            raise DomainError("weights must be non-negative with positive total")
        with np.errstate(divide="ignore"):
            return cls(np.log(p))

    @classmethod
    def dirac(cls, H, index):
        lw = np.full(H, -np.inf)
        lw[index] = 0.0
        return cls(lw)

    def mean(self, values):
        """Expectation of a per-hypothesis vector under these weights."""
        p = self.probs
        v = np.asarray(values, dtype=float)
        mask = p > 0
        return float(np.dot(p[mask], v[mask]))


@dataclass(frozen=True)
class FiniteHypothesisClass:
    """Prior log weights (length H) and an N x H matrix of 0/1 losses."""

    prior_log_weights: np.ndarray
    losses: np.ndarray
    submodel_index: np.ndarray = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lw = np.asarray(self.prior_log_weights, dtype=float).ravel()
        L = np.asarray(self.losses)
        if L.ndim != 2:
            raise DomainError("losses must be a 2-d N x H array")
        N, H = L.shape
        if N < 1 or H < 1:
            raise DomainError("need N >= 1 and H >= 1")
        if lw.shape[0] != H:
            raise DomainError(f"prior has {lw.shape[0]} weights but losses have {H} columns")
        if not np.all((L == 0) | (L == 1)):
            raise DomainError("losses must be 0/1")
        if np.any(np.isnan(lw)) or np.any(lw == np.inf):
            raise DomainError("prior log weights must be finite or -inf")
        total = logsumexp(lw)
        if not np.isfinite(total):
            raise DomainError("prior has no mass")
        if abs(total) > 1e-10:
            raise DomainError(f"prior log weights are not normalized (log-sum-exp = {total})")
        L = L.astype(np.int8)
        lw = lw.copy()
        lw.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "prior_log_weights", lw)
        object.__setattr__(self, "losses", L)
        if self.submodel_index is not None:
            idx = np.asarray(self.submodel_index, dtype=int).ravel()
            if idx.shape[0] != H:
                raise DomainError("submodel_index must have one entry per hypothesis")
            idx.setflags(write=False)
            object.__setattr__(self, "submodel_index", idx)

    @classmethod
    def from_weights(cls, weights, losses, submodel_index=None):
        """Build from non-negative prior weights (normalized here)."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise DomainError("weights must be non-negative with positive total")
        with np.errstate(divide="ignore"):
            lw = np.log(w) - np.log(w.sum())
        lw = lw - logsumexp(lw)
        return cls(lw, losses, submodel_index)

    @classmethod
    def uniform(cls, losses, submodel_index=None):
        H = np.asarray(losses).shape[1]
        return cls(np.full(H, -np.log(H)), losses, submodel_index)

    @property
    def N(self):
        return self.losses.shape[0]

    @property
    def H(self):
        return self.losses.shape[1]

    @property
    def risks(self):
        """Empirical risk r(theta) of every hypothesis."""
        if "risks" not in self._cache:
            r = self.losses.mean(axis=0)
            r.setflags(write=False)
            self._cache["risks"] = r
        return self._cache["risks"]

    @property
    def support(self):
        """Boolean mask of hypotheses with positive prior weight."""
        return np.isfinite(self.prior_log_weights)

    @property
    def prior(self):
        return PosteriorWeights(self.prior_log_weights)

    def min_risk(self):
        """ess inf of r under the prior (zero-weight atoms excluded)."""
        return float(self.risks[self.support].min())

    def disagreement(self):
        """H x H matrix of m'(theta, theta') = fraction of points where exactly one errs."""
        if "disagreement" not in self._cache:
            L = self.losses.astype(float)
            s = L.sum(axis=0)
            D = (s[:, None] + s[None, :] - 2.0 * (L.T @ L)) / self.N
            D.setflags(write=False)
            self._cache["disagreement"] = D
        return self._cache["disagreement"]

    def restrict(self, mask):
        """Prior conditioned on a subset of hypotheses (same index set)."""
        mask = np.asarray(mask, dtype=bool)
        lw = np.where(mask, self.prior_log_weights, -np.inf)
        if not np.any(np.isfinite(lw)):
            raise DomainError("restriction has no prior mass")
        return FiniteHypothesisClass(lw - logsumexp(lw), self.losses, self.submodel_index)

    def submodels(self):
        """Sorted ids of submodels that carry prior mass."""
        if self.submodel_index is None:
            return [0]
        ids = np.unique(self.submodel_index[self.support])
        return [int(i) for i in ids]

    # Text serialization: one hypothesis per line, weight then N loss bits.
    def to_text(self):
        lines = []
        w = np.exp(self.prior_log_weights)
        for j in range(self.H):
            bits = "".join(str(int(b)) for b in self.losses[:, j])
            lines.append(f"{float(w[j])!r} {bits}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        weights, columns = [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise IngestionError("expected '<weight> <bits>'", lineno)
            try:
                weights.append(float(parts[0]))
            except ValueError as exc:
                raise IngestionError(f"bad weight {parts[0]!r}", lineno) from exc
            if set(parts[1]) - {"0", "1"}:
                raise IngestionError("loss bits must be 0/1", lineno)
            columns.append([int(c) for c in parts[1]])
        if not columns:
            raise IngestionError("no hypotheses found")
        if len({len(c) for c in columns}) != 1:
            raise IngestionError("all hypotheses need the same number of loss bits")
        return cls.from_weights(weights, np.array(columns).T)


def _as_model_weights(model, lam, values=None):
    r = model.risks if values is None else np.asarray(values, dtype=float)
    lw = model.prior_log_weights.copy()
    s = model.support
    lw[s] = lw[s] - lam * r[s]
    return lw


def log_partition(model, lam, values=None):
    """log sum_theta pi(theta) exp(-lam r(theta)).

    ``values`` substitutes another per-hypothesis vector for r (for example an
    oracle risk).
    """
    return float(logsumexp(_as_model_weights(model, lam, values)))


def gibbs(model, lam, values=None):
    """Gibbs posterior pi_{exp(-lam r)}."""
    return PosteriorWeights(_as_model_weights(model, lam, values))


def gibbs_risk(model, lam, values=None):
    """pi_{exp(-lam r)}(r), equal to -d/dlam log_partition."""
    r = model.risks if values is None else np.asarray(values, dtype=float)
    return gibbs(model, lam, values).mean(r)


def kl(rho, pi_weights):
    """K(rho, pi); +inf when rho puts mass outside the support of pi."""
    a = rho.log_weights
    b = pi_weights.log_weights
    mask = np.isfinite(a)
    if np.any(~np.isfinite(b[mask])):
        return float("inf")
    p = np.exp(a[mask])
    return max(0.0, float(np.dot(p, a[mask] - b[mask])))


def _beta_grid(model, values, shift=None):
    r = model.risks if values is None else np.asarray(values, dtype=float)
    rs = r[model.support]
    lo = rs.min()
    gaps = np.unique(rs) - lo
    gaps = gaps[gaps > 0]
    if gaps.size == 0:
        return None
    # beyond 800/gap every non-minimal atom is below double precision
    beta_max = min(1e7 * model.N, 800.0 / gaps.min())
    n = int(np.ceil(np.log(beta_max / BETA_MIN) / np.log(BETA_RATIO))) + 1
    return BETA_MIN * BETA_RATIO ** np.arange(n)


def sup_excess(model, values=None, margin=0.0, grid=None, polish=True):
    """sup_beta beta [pi_{exp(-beta v)}(v) - ess inf v - margin], floored at 0.

    The floor is the beta -> 0 limit of the supremand. With ``polish`` the best
    grid point is refined by a bounded 1-d search in log beta, which can only
    increase the result.
    """
    r = model.risks if values is None else np.asarray(values, dtype=float)
    base = float(r[model.support].min()) + margin
    if grid is None:
        grid = _beta_grid(model, values)
    if grid is None:
        return 0.0
    s = model.support
    lw, rs = model.prior_log_weights[s], r[s]
    best, best_beta = 0.0, None
    grid = np.asarray(grid, dtype=float)
    for chunk in np.array_split(grid, max(1, grid.size * rs.size // 2_000_000 + 1)):
        W = lw[None, :] - chunk[:, None] * rs[None, :]
        W = np.exp(W - logsumexp(W, axis=1, keepdims=True))
        vals = chunk * (W @ rs - base)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_beta = float(vals[i]), float(chunk[i])
    if polish and best_beta is not None:
        f = lambda t: -np.exp(t) * (gibbs_risk(model, np.exp(t), r) - base)
        step = np.log(BETA_RATIO)
        res = minimize_scalar(f, bounds=(np.log(best_beta) - step, np.log(best_beta) + step),
                              method="bounded", options={"xatol": 1e-10})
        best = max(best, float(-res.fun))
    return best


def empirical_dimension(model, grid=None, polish=True):
    """d_e = sup_beta beta [pi_{exp(-beta r)}(r) - ess inf r] over a geometric beta grid."""
    return sup_excess(model, None, 0.0, grid, polish)


def pair_distance(model, theta1, theta2):
    """m'(theta1, theta2): fraction of points where exactly one of the two errs."""
    H = model.H
    for t in (theta1, theta2):
        if not 0 <= t < H:
            raise IndexError(f"hypothesis index {t} out of range")
    L = model.losses
    return float(np.mean(L[:, theta1] != L[:, theta2]))


def gibbs_risk_integral(model, beta, lam, values=None):
    """int_beta^lam pi_{exp(-xi r)}(r) dxi = logZ(beta) - logZ(lam)."""
    if beta > lam:
        raise DomainError("need beta <= lambda")
    return log_partition(model, beta, values) - log_partition(model, lam, values)


def expected_disagreement(model, rho):
    """Vector g(theta) = sum_theta' rho(theta') m'(theta, theta').  Costs O(H^2)."""
    D = model.disagreement()
    p = rho.probs
    mask = p > 0
    return D[:, mask] @ p[mask]


def mgf_pair(model, lam1, rho, xi, base=None):
    """log sum_theta pi_{exp(-lam1 r)}(theta) exp(xi g(theta)), g = expected_disagreement(rho).

    ``base`` replaces the prior when given (any FiniteHypothesisClass on the
    same losses).
    """
    if xi == 0.0:
        return 0.0
    m = model if base is None else base
    g = expected_disagreement(model, rho)
    post = gibbs(m, lam1).log_weights
    return float(logsumexp(post + xi * g))
