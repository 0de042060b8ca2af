"""Published numeric examples with their tolerances.

Both the ``repro`` command and the acceptance tests read from this table, so
each expected value and tolerance is written down exactly once.
"""

from dataclasses import dataclass, field

from . import local_bounds as lb
from . import nonlocal_bounds as nb
from . import relative as rel
from . import transductive as tr


@dataclass(frozen=True)
class Example:
    id: str
    expected: float
    tol: float
    anchor: str
    compute: object
    checks: dict = field(default_factory=dict)  # name -> (expected, tol) on the optimized block

    def run(self):
        value, optimized = self.compute()
        ok = abs(value - self.expected) <= self.tol
        failures = []
        if not ok:
            failures.append(f"value {value:.6g} outside {self.expected} +/- {self.tol}")
        for name, (want, tol) in self.checks.items():
            got = optimized.get(name)
            if got is None or abs(got - want) > tol:
                ok = False
                failures.append(f"{name}={got} outside {want} +/- {tol}")
        return RunResult(self, value, optimized, ok, "; ".join(failures))


@dataclass(frozen=True)
class RunResult:
    example: Example
    value: float
    optimized: dict
    passed: bool
    detail: str = ""


VAPNIK = dict(N=1000, r1=0.2, h=10, eps=0.01)


def _basic():
    v, lam = nb.optimized_deviation_bound(nb.ScalarBoundQuery(1000, 0.2, eps=0.01), 0.0)
    return v, {"lambda": lam}


def _unbiased():
    q = nb.ScalarBoundQuery(1000, 0.2, d=10)
    v, lam = nb.optimized_unbiased_bound(q)
    return v, {"lambda": lam, "sqrt_bound": nb.sqrt_bound(q)}


def _sqrt():
    return nb.sqrt_bound(nb.ScalarBoundQuery(1000, 0.2, d=10)), {}


def _nonrandom():
    return lb.nonrandom_rate(10, 0.2, 0.0, 1000), {}


def _local(which):
    def run():
        nl, lin = lb.local_deviation_from_dimension(1000, 10, 0.2, 0.01, 0.5, 0.1)
        return (nl if which == 0 else lin), {}
    return run


def _corollary():
    return lb.local_corollary_from_dimension(1000, 10, 0.2, 0.01, 100), {}


def _relative_root():
    return rel.relative_root(0.5, 0.2, 0.1), {}


def _transductive(k):
    def run():
        v, lam = tr.transductive_bound(tr.VapnikQuery(**VAPNIK), k)
        return v, {"lambda": lam, "k": k}
    return run


def _same_size():
    v, lam = tr.transductive_bound_k1(tr.VapnikQuery(**VAPNIK))
    return v, {"lambda": lam}


def _exchangeable():
    v, lam = tr.exchangeable_bound(tr.VapnikQuery(**VAPNIK))
    return v, {"lambda": lam}


def _inductive():
    r = tr.inductive_bound(tr.VapnikQuery(**VAPNIK))
    return r.bound, {"k": r.k_star, "lambda": r.lambda_star}


def _inductive_gaussian():
    r = tr.inductive_bound_gaussian(tr.VapnikQuery(**VAPNIK))
    return r.bound, {"k": r.k_star}


def _inductive_grid():
    r = tr.inductive_bound_grid(tr.VapnikQuery(**VAPNIK))
    return r.bound, {"k": r.k_star, "lambda": r.lambda_star}


def _iid(which):
    def run():
        exact, lam, gauss = tr.inductive_bound_k1_iid(tr.VapnikQuery(**VAPNIK))
        return (exact, {"lambda": lam}) if which == 0 else (gauss, {})
    return run


def _classical():
    return tr.vapnik_classical(tr.VapnikQuery(**VAPNIK)), {}


def _slack(N):
    def run():
        return tr.slack(N), {}
    return run


EXAMPLES = (
    Example("basic-0.2402", 0.2402, 5e-4, "deviation bound, N=1000, r=0.2, eps=0.01, kl=0", _basic,
            {"lambda": (234, 2)}),
    Example("unbiased-0.2604", 0.2604, 5e-4, "optimized unbiased bound, N=1000, q=0.2, d=10", _unbiased),
    Example("sqrt-0.2622", 0.2622, 5e-4, "square-root closed form, N=1000, q=0.2, d=10", _sqrt),
    Example("nonrandom-local-0.373", 0.373, 1e-3, "non-random local bound, d=10, N=1000, ess inf R=0.2", _nonrandom),
    Example("local-deviation-0.332", 0.332, 2e-3, "local deviation, d_e=10, ess inf r=0.2, alpha=0.5, gamma=0.1", _local(0)),
    Example("local-linear-0.372", 0.372, 2e-3, "local deviation linear form", _local(1)),
    Example("local-corollary-0.475", 0.475, 2e-3, "local corollary at beta=100", _corollary),
    Example("relative-root-0.096", 0.096, 5e-4, "relative deviation root, (lambda, beta, B) = (0.5, 0.2, 0.1)",
            _relative_root),
    Example("transductive-k15", 0.4093, 5e-4, "shadow sample bound, k=15", _transductive(15), {"lambda": (965, 3)}),
    Example("transductive-k16", 0.4093, 5e-4, "shadow sample bound, k=16", _transductive(16), {"lambda": (968, 3)}),
    Example("transductive-k17", 0.4093, 5e-4, "shadow sample bound, k=17", _transductive(17), {"lambda": (971, 3)}),
    Example("transductive-k1", 0.539, 1e-3, "shadow sample bound, k=1", _transductive(1)),
    Example("same-size-0.5033", 0.5033, 1e-3, "shadow sample of the same size", _same_size),
    Example("exchangeable-0.4450", 0.4450, 1e-3, "exchangeable sample corollary", _exchangeable),
    Example("inductive-0.4211", 0.4211, 5e-4, "inductive bound", _inductive, {"k": (15, 0), "lambda": (1010, 5)}),
    Example("inductive-gaussian-0.4325", 0.4325, 1e-3, "Gaussian approximation of the inductive bound",
            _inductive_gaussian, {"k": (15, 0)}),
    Example("inductive-grid-0.4271", 0.4271, 1e-3, "inductive bound on the alpha=1.1 lambda grid", _inductive_grid,
            {"k": (16, 0)}),
    Example("iid-exact-0.453", 0.453, 1e-3, "i.i.d. bound with a shadow sample of size N", _iid(0),
            {"lambda": (1195, 10)}),
    Example("iid-gaussian-0.461", 0.461, 1e-3, "Gaussian form of the i.i.d. bound", _iid(1)),
    Example("vapnik-classical", 0.610, 1e-3, "classical Vapnik bound", _classical),
    Example("slack-1e3", 3.7, 0.0, "registered slack, N <= 1e3", _slack(10**3)),
    Example("slack-1e6", 4.4, 0.0, "registered slack, N <= 1e6", _slack(10**6)),
    Example("slack-1e9", 4.7, 0.0, "registered slack, N <= 1e9", _slack(10**9)),
)

BY_ID = {e.id: e for e in EXAMPLES}


def get(example_id):
    try:
        return BY_ID[example_id]
    except KeyError:
        raise KeyError(f"unknown example id {example_id!r}") from None
