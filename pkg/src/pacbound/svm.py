"""Support vector machines in dual form and the margin-based bounds built on them."""

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.special import gammaln, logsumexp

from .errors import DomainError, IngestionError, KernelError
from .optimize import minimize_log
from .transductive import VapnikQuery, transductive_bound

# ---------------------------------------------------------------- kernels


class KernelSpec:
    """Positive kernels closed under non-negative sums, products and feature maps."""

    def __call__(self, X, Y):
        raise NotImplementedError

    def __add__(self, other):
        return ScaledSum(((1.0, self), (1.0, other)))

    def __mul__(self, other):
        if isinstance(other, KernelSpec):
            return Product(self, other)
        return ScaledSum(((float(other), self),))

    __rmul__ = __mul__

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Linear(KernelSpec):
    def __call__(self, X, Y):
        return X @ Y.T

    def to_dict(self):
        return {"kind": "linear"}


@dataclass(frozen=True, eq=False)
class Polynomial(KernelSpec):
    """sum_k c_k <x, y>^k with all c_k >= 0."""

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        if any(x < 0 for x in c):
            raise KernelError("polynomial kernel coefficients must be non-negative")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, X, Y):
        G = X @ Y.T
        return sum(c * G**k for k, c in enumerate(self.coefficients))

    def to_dict(self):
        return {"kind": "polynomial", "coefficients": list(self.coefficients)}


@dataclass(frozen=True, eq=False)
class Gaussian(KernelSpec):
    """exp(-||x - y||^2 / (2 width^2))."""

    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise KernelError("gaussian width must be positive")

    def __call__(self, X, Y):
        sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2 * X @ Y.T
        return np.exp(-np.maximum(sq, 0.0) / (2 * self.width**2))

    def to_dict(self):
        return {"kind": "gaussian", "width": self.width}


@dataclass(frozen=True, eq=False)
class ScaledSum(KernelSpec):
    terms: tuple

    def __post_init__(self):
        if any(a < 0 for a, _ in self.terms):
            raise KernelError("kernel sum weights must be non-negative")

    def __call__(self, X, Y):
        return sum(a * k(X, Y) for a, k in self.terms)

    def to_dict(self):
        return {"kind": "sum", "terms": [[a, k.to_dict()] for a, k in self.terms]}


@dataclass(frozen=True, eq=False)
class Product(KernelSpec):
    left: KernelSpec
    right: KernelSpec

    def __call__(self, X, Y):
        return self.left(X, Y) * self.right(X, Y)

    def to_dict(self):
        return {"kind": "product", "left": self.left.to_dict(), "right": self.right.to_dict()}


@dataclass(frozen=True, eq=False)
class FeatureMap(KernelSpec):
    """K(g(x), g(y)) for a row-wise map g."""

    g: object
    base: KernelSpec
    name: str = "g"

    def __call__(self, X, Y):
        return self.base(np.asarray(self.g(X), float), np.asarray(self.g(Y), float))

    def to_dict(self):
        return {"kind": "feature_map", "name": self.name, "base": self.base.to_dict()}


def kernel_from_dict(d):
    kind = d["kind"]
    if kind == "linear":
        return Linear()
    if kind == "polynomial":
        return Polynomial(tuple(d["coefficients"]))
    if kind == "gaussian":
        return Gaussian(d["width"])
    if kind == "sum":
        return ScaledSum(tuple((a, kernel_from_dict(k)) for a, k in d["terms"]))
    if kind == "product":
        return Product(kernel_from_dict(d["left"]), kernel_from_dict(d["right"]))
    raise KernelError(f"cannot rebuild kernel of kind {kind!r}")


def gram(kernel, X, check=True):
    """Symmetric Gram matrix; raises KernelError when an eigenvalue is below -1e-8 trace."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if not np.all(np.isfinite(X)):
        raise DomainError("points must be finite")
    G = kernel(X, X)
    G = (G + G.T) / 2
    if check and G.size:
        lo = np.linalg.eigvalsh(G)[0]
        if lo < -1e-8 * max(np.trace(G), 1e-300):
            raise KernelError(f"Gram matrix not positive semi-definite (smallest eigenvalue {lo:.3g})")
    return G


def r_squared(G):
    """max_i K_ii + mean(K) - 2 mean_j K_ij: squared radius of a ball around the feature-space centroid."""
    G = np.asarray(G, float)
    return float(np.max(np.diag(G) + G.mean() - 2 * G.mean(axis=1)))


# ---------------------------------------------------------------- dual solver


@dataclass
class DualSolution:
    alpha: np.ndarray
    bias: float
    box: float
    status: str
    support_set: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    margin: float = math.nan
    objective: float = math.nan
    kkt_residual: float = math.nan
    iterations: int = 0
    history: list = None

    def to_dict(self):
        return {
            "alpha": self.alpha.tolist(),
            "bias": self.bias,
            "box": None if math.isinf(self.box) else self.box,
            "status": self.status,
            "support_set": self.support_set.tolist(),
            "margin": None if math.isnan(self.margin) else self.margin,
            "objective": None if math.isnan(self.objective) else self.objective,
        }


def separable(G, y):
    """LP feasibility of y_i (sum_j beta_j K_ij - b) >= 1, i.e. separability in feature space."""
    n = len(y)
    A = -(y[:, None] * np.hstack([G, -np.ones((n, 1))]))
    res = linprog(np.zeros(n + 1), A_ub=A, b_ub=-np.ones(n), bounds=[(None, None)] * (n + 1), method="highs")
    return res.status == 0


def solve_dual(G, labels, box=None, tol=1e-8, max_iter=1_000_000, record=False):
    """Minimize F(alpha) = ||sum alpha_i y_i x_i||^2 - 2 sum alpha_i over sum y_i alpha_i = 0, 0 <= alpha <= box.

    Working pairs are chosen by the maximal-violating-pair rule (lowest index on
    ties). Without a box, separability is checked first by linear programming
    and an inseparable training set is reported as status "inseparable".
    """
    G = np.asarray(G, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    n = y.size
    if G.shape != (n, n):
        raise DomainError("Gram matrix and labels disagree in size")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DomainError("labels must be +1 or -1")
    C = math.inf if box is None else float(box)
    if C <= 0:
        raise DomainError("box must be positive")
    if np.all(y == 1) or np.all(y == -1):
        return DualSolution(np.zeros(n), math.nan, C, "degenerate")
    if math.isinf(C) and not separable(G, y):
        return DualSolution(np.zeros(n), math.nan, C, "inseparable")

    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - sum a, Q = yy' * G
    diag = np.diag(G)
    hist = [] if record else None
    it = 0
    gap = math.inf
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j = int(np.argmin(np.where(low, yg, np.inf)))
        gap = yg[i] - yg[j]
        if gap < tol:
            break
        eta = diag[i] + diag[j] - 2 * G[i, j]
        ti = C - alpha[i] if y[i] > 0 else alpha[i]
        tj = alpha[j] if y[j] > 0 else C - alpha[j]
        cap = min(ti, tj)
        t = gap / eta if eta > 1e-15 else math.inf
        t = min(t, cap)
        if math.isinf(t):
            return DualSolution(alpha, math.nan, C, "inseparable", iterations=it)
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        grad += t * y * (G[:, i] - G[:, j])
        if C < math.inf:
            alpha[i] = min(max(alpha[i], 0.0), C)
            alpha[j] = min(max(alpha[j], 0.0), C)
        else:
            alpha[i] = max(alpha[i], 0.0)
            alpha[j] = max(alpha[j], 0.0)
        it += 1
        if record:
            hist.append(_objective(G, y, alpha))
    status = "optimal" if gap < tol else "max_iter"
    ya = y * alpha
    w2 = float(ya @ G @ ya)
    score = G @ ya
    amax = alpha.max()
    sv = np.flatnonzero(alpha > 1e-7 * amax) if amax > 0 else np.zeros(0, int)
    bias = _bias(score, y, alpha, C, sv)
    margin = 1 / math.sqrt(w2) if (math.isinf(C) and w2 > 0) else math.nan
    if not math.isinf(C) and w2 > 0 and np.all(y * (score - bias) >= 1 - 1e-6):
        margin = 1 / math.sqrt(w2)
    return DualSolution(alpha, bias, C, status, sv, margin, w2 - 2 * alpha.sum(), float(gap), it, hist)


def _objective(G, y, alpha):
    ya = y * alpha
    return float(ya @ G @ ya - 2 * alpha.sum())


def _bias(score, y, alpha, C, sv):
    if sv.size == 0:
        return math.nan
    amax = alpha.max()
    if math.isinf(C):
        i_minus = sv[y[sv] < 0]
        i_plus = sv[y[sv] > 0]
        return float((score[i_minus[0]] + score[i_plus[0]]) / 2)
    eps = 1e-7 * max(amax, 1.0)
    interior = np.flatnonzero((alpha > eps) & (alpha < C - eps))
    if interior.size:
        j = interior[0]
        return float(score[j] - y[j])
    pos = sv[y[sv] > 0]
    return float(np.max(score[pos] - 1)) if pos.size else math.nan


def decision(kernel, solution, X_train, labels, X):
    """sum_i alpha_i y_i K(x_i, x) - b for each row of X."""
    X_train = np.atleast_2d(np.asarray(X_train, float))
    X = np.atleast_2d(np.asarray(X, float))
    ya = np.asarray(labels, float) * solution.alpha
    sv = solution.support_set
    return kernel(X, X_train[sv]) @ ya[sv] - solution.bias


def predict(kernel, solution, X_train, labels, X):
    """Sign of the decision function (0 mapped to +1)."""
    return np.where(decision(kernel, solution, X_train, labels, X) >= 0, 1, -1)


def train(kernel, X, labels, box=None, **kw):
    """Gram matrix plus dual solve."""
    return solve_dual(gram(kernel, X), labels, box, **kw)


def retrain_on_support(kernel, X, labels, solution, box=None):
    """Solve again on the support set only. Returns (support indices, new solution)."""
    sv = solution.support_set
    X = np.atleast_2d(np.asarray(X, float))
    y = np.asarray(labels, float)
    sub = solve_dual(gram(kernel, X[sv]), y[sv], box)
    return sv, sub


def model_json(kernel, solution):
    return json.dumps({"kernel": kernel.to_dict(), **solution.to_dict()}, sort_keys=True)


def read_csv(text):
    """Rows of features followed by a +1/-1 label; header optional."""
    X, y = [], []
    width = None
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            vals = [float(c) for c in row[:-1]]
            lab = int(float(row[-1]))
        except ValueError as exc:
            if lineno == 1 and not X:
                continue
            raise IngestionError(f"cannot parse row {row!r}", lineno) from exc
        if width is None:
            width = len(vals)
        if len(vals) != width or width == 0:
            raise IngestionError("inconsistent number of columns", lineno)
        if lab not in (-1, 1):
            raise IngestionError("labels must be +1 or -1", lineno)
        if not all(math.isfinite(v) for v in vals):
            raise IngestionError("features must be finite", lineno)
        X.append(vals)
        y.append(lab)
    if not X:
        raise IngestionError("no data rows")
    return np.array(X), np.array(y)


# ---------------------------------------------------------------- margins and complexity


def gamma_h(h):
    """(2m-1)^{-1/2} for h = 2m and [2m(1 - 1/(2m+1)^2)]^{-1/2} for h = 2m+1 (infinite at h = 1)."""
    if h < 1 or int(h) != h:
        raise DomainError("h must be a positive integer")
    if h % 2 == 0:
        return (h - 1) ** -0.5
    m = (h - 1) // 2
    if m == 0:
        return math.inf
    return (2 * m * (1 - 1 / h**2)) ** -0.5


def margin_to_dimension(margin_gamma, radius_R):
    """Smallest h with R gamma_h <= margin (relative tolerance 1e-12).

    gamma_1 is infinite, so the answer is at least 2.
    """
    if not (margin_gamma > 0 and radius_R > 0):
        raise DomainError("margin and radius must be positive")
    ratio = margin_gamma / radius_R
    h = max(2, int((1 / ratio) ** 2) - 2)
    while h > 2 and gamma_h(h - 1) <= ratio * (1 + 1e-12):
        h -= 1
    while gamma_h(h) > ratio * (1 + 1e-12):
        h += 1
    return h


def variance(X):
    X = np.asarray(X, float)
    return float(((X - X.mean(0)) ** 2).sum(1).mean())


def fat_shattering_cover_log(n, b, h, tight=False):
    """Log-size bound of a separated set for a class of fat shattering dimension <= h on n points.

    log[(b-1)(b-2)n] {[log((b-2)n/h) + 1] h/log 2 + 1} + log 2, or with
    ``tight`` the binomial-sum form log[(b-1)(b-2)n] {log sum_{i<=h} C(n,i)(b-2)^i / log 2 + 1} + log 2.
    Both are capped by n log b, the count of all functions.
    """
    if b < 3 or n < 1 or not 1 <= h <= n:
        raise DomainError("need b >= 3, n >= 1 and 1 <= h <= n")
    lead = math.log((b - 1) * (b - 2) * n)
    if tight:
        i = np.arange(1, h + 1)
        ls = logsumexp(gammaln(n + 1) - gammaln(i + 1) - gammaln(n - i + 1) + i * math.log(b - 2))
        val = lead * (ls / math.log(2) + 1) + math.log(2)
    else:
        val = lead * ((math.log((b - 2) * n / h) + 1) * h / math.log(2) + 1) + math.log(2)
    return min(val, n * math.log(b))


def svm_penalty(N, k, h, eps):
    """h log(e(k+1)N/h) + log[h(h+1)] - log eps."""
    return h * math.log(math.e * (k + 1) * N / h) + math.log(h * (h + 1)) - math.log(eps)


def transductive_svm_bound(r1, N, k, h, eps):
    """(k+1)/k inf_lam (1 - exp(-lam r1/N - pen/N)) / (1 - e^{-lam/N}) - r1/k."""
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    q = VapnikQuery(N, r1, h, eps)
    return transductive_bound(q, k, d=svm_penalty(N, k, h, eps))


@dataclass(frozen=True)
class TransductiveSVMResult:
    bound: float
    lambda_star: float
    h: int
    margin: float
    r_squared: float
    training_error: float


def transductive_svm_pipeline(kernel, X_train, y_train, X_shadow, eps=0.01):
    """Train, label the shadow set, retrain on everything and bound the shadow error.

    The bound applies to the SVM of the fully labelled set; its margin and the
    R^2 statistic over all (k+1)N patterns give h.
    """
    X_train = np.atleast_2d(np.asarray(X_train, float))
    X_shadow = np.atleast_2d(np.asarray(X_shadow, float))
    N = X_train.shape[0]
    if X_shadow.shape[0] % N:
        raise DomainError("shadow set size must be a multiple of N")
    k = X_shadow.shape[0] // N
    sol = train(kernel, X_train, y_train)
    if sol.status != "optimal":
        raise DomainError(f"training set: {sol.status}")
    y_shadow = predict(kernel, sol, X_train, y_train, X_shadow)
    X_all = np.vstack([X_train, X_shadow])
    y_all = np.concatenate([np.asarray(y_train, float), y_shadow])
    G = gram(kernel, X_all)
    full = solve_dual(G, y_all)
    if full.status != "optimal":
        raise DomainError(f"extended set: {full.status}")
    R2 = r_squared(G)
    h = margin_to_dimension(full.margin, math.sqrt(R2))
    h = min(h, (k + 1) * N)
    err = float(np.mean(predict(kernel, full, X_all, y_all, X_train) != np.asarray(y_train)))
    bound, lam = transductive_svm_bound(err, N, k, h, eps)
    return TransductiveSVMResult(bound, lam, h, full.margin, R2, err)


def _clip(X, R_max):
    norms = np.linalg.norm(X, axis=1)
    scale = np.minimum(1.0, R_max / np.where(norms > 0, norms, 1.0))
    return X * scale[:, None]


@dataclass(frozen=True)
class MarginBound:
    bound: float
    h: int
    lambda_star: float
    quantile_risk: float


def margin_quantile_risk(X, labels, w, b, R_max, h):
    """Fraction of training points with g(t(X_i)) Y_i <= 4 R_max gamma_h."""
    Xc = _clip(np.atleast_2d(np.asarray(X, float)), R_max)
    m = (Xc @ np.asarray(w, float) - b) * np.asarray(labels, float)
    return float(np.mean(m <= 4 * R_max * gamma_h(h)))


def inductive_margin_bound(X, labels, w, b, R_max, nu_atoms, eps, k, h_grid=None):
    """Bound for a linear rule g(x) = <w,x> - b with ||w|| = 1, patterns clipped to the ball of radius R_max.

    (k+1)/k inf over lam, h of (1 - exp(-lam q_h/N - C_h/N)) / (1 - e^{-lam/N}) - q_h/k with
    C_h = fat_shattering_cover_log((k+1)N, 6, h) + log[h(h+1)/(eps nu(R_max))] and q_h the
    margin-quantile risk at level 4 R_max gamma_h.
    """
    X = np.atleast_2d(np.asarray(X, float))
    N = X.shape[0]
    w = np.asarray(w, float)
    nw = np.linalg.norm(w)
    if nw == 0:
        raise DomainError("w must be non-zero")
    w, b = w / nw, b / nw
    if R_max not in nu_atoms:
        raise DomainError("R_max must be one of the atoms of nu")
    nu = nu_atoms[R_max]
    if not 0 < nu <= 1 or sum(nu_atoms.values()) > 1 + 1e-12:
        raise DomainError("nu must be a sub-probability with nu(R_max) > 0")
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    n = (k + 1) * N
    grid = range(2, min(n, 200) + 1) if h_grid is None else h_grid
    best = MarginBound(math.inf, None, math.nan, math.nan)
    for h in grid:
        q = margin_quantile_risk(X, labels, w, b, R_max, h)
        C = fat_shattering_cover_log(n, 6, h) + math.log(h * (h + 1) / (eps * nu))

        def f(lam):
            return (k + 1) / k * -math.expm1(-lam * q / N - C / N) / -math.expm1(-lam / N) - q / k

        if q == 0:
            v, lam = (k + 1) / k * -math.expm1(-C / N), math.inf
        else:
            v, lam = minimize_log(f, 1.0, 10.0 * N)
        if v < best.bound:
            best = MarginBound(v, h, lam, q)
    return best


def simplified_margin_bound(N, k, R2, gamma, eps):
    """Closed-form bound for a hard-margin rule with margin gamma = min y g(x) > 0.

    (k+1)/k {1 - exp[-log(20(k+1)N)/N {(16R^2 + 2gamma^2)/(log 2 gamma^2) log(e(k+1)N gamma^2/(4R^2)) + 1}
    + log(eps/2)/N]}.
    """
    if gamma <= 0:
        raise DomainError("margin must be positive")
    g2 = gamma * gamma
    inner = (16 * R2 + 2 * g2) / (math.log(2) * g2) * math.log(math.e * (k + 1) * N * g2 / (4 * R2)) + 1
    return (k + 1) / k * -math.expm1(-math.log(20 * (k + 1) * N) / N * inner + math.log(eps / 2) / N)


# ---------------------------------------------------------------- VC dimension of half-spaces


def _linearly_separable(P, y):
    n, d = P.shape
    A = -(y[:, None] * np.hstack([P, -np.ones((n, 1))]))
    res = linprog(np.zeros(d + 1), A_ub=A, b_ub=-np.ones(n), bounds=[(None, None)] * (d + 1), method="highs")
    return res.status == 0


def shattered(P):
    """Whether every +/-1 labelling of the rows of P is realised by an affine half-space."""
    P = np.atleast_2d(np.asarray(P, float))
    for signs in itertools.product((-1.0, 1.0), repeat=P.shape[0]):
        if not _linearly_separable(P, np.array(signs)):
            return False
    return True


def halfspace_vc_check(d, samples=20, seed=0):
    """Exhaustive check that half-spaces of R^d shatter d+1 points but not d+2. Returns d+1."""
    if not 1 <= d <= 4:
        raise DomainError("exhaustive mode supports 1 <= d <= 4")
    simplex = np.vstack([np.zeros(d), np.eye(d)])
    if not shattered(simplex):
        raise AssertionError("simplex not shattered")
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        if shattered(rng.standard_normal((d + 2, d))):
            raise AssertionError("d+2 points shattered")
    return d + 1
