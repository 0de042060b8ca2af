import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from pacbound import threshold as th
from pacbound.errors import DomainError, IngestionError


def fixture(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 7))
    h = int(rng.integers(1, 3))
    Y = int(rng.integers(2, 4))
    # two decimals so that ties (collapsed cells) show up
    X = np.round(rng.uniform(0.05, 0.95, (N, h)), 1)
    y = rng.integers(0, Y, N)
    return th.LabeledDataset(X, y), Y


class Enumeration:
    """All (threshold cell, response table) pairs of a dataset, built from first principles.

    Extra patterns add boundaries, which refines the cells without changing
    any training response; the cell weights stay interval lengths.
    """

    def __init__(self, ds, Y, extra=()):
        X, self.y = ds.patterns, ds.labels
        self.N, self.h = X.shape
        self.Y = Y
        pieces = []
        for j in range(self.h):
            cuts = np.unique(np.concatenate(([0.0, 1.0], X[:, j], [e[j] for e in extra])))
            pieces.append([(a, b) for a, b in zip(cuts[:-1], cuts[1:])])
        self.reps, self.logw = [], []
        for combo in itertools.product(*pieces):
            self.reps.append(np.array([(a + b) / 2 for a, b in combo]))
            self.logw.append(sum(math.log(b - a) for a, b in combo))
        self.tables = list(itertools.product(range(Y), repeat=2**self.h))
        self.X = X

    def code(self, t, x):
        return sum(int(x[j] >= t[j]) << j for j in range(self.h))

    def hypotheses(self):
        for t, lw in zip(self.reps, self.logw):
            codes = [self.code(t, x) for x in self.X]
            for a in self.tables:
                errs = np.array([a[c] != yy for c, yy in zip(codes, self.y)], dtype=float)
                yield t, a, lw - len(a) * math.log(self.Y), errs

    def log_partition(self, lam):
        return logsumexp([lw - lam * e.mean() for _, _, lw, e in self.hypotheses()])

    def predict(self, lam, x):
        out = np.zeros(self.Y)
        terms = [(lw - lam * e.mean(), a[self.code(t, x)]) for t, a, lw, e in self.hypotheses()]
        logs = np.array([v for v, _ in terms])
        w = np.exp(logs - logsumexp(logs))
        for wi, (_, lab) in zip(w, terms):
            out[lab] += wi
        return out

    def mgf(self, lam, xi, ref_errors):
        return logsumexp([lw - lam * e.mean() + xi * np.abs(e - ref_errors).mean()
                          for _, _, lw, e in self.hypotheses()])


SEEDS = range(24)


@pytest.mark.parametrize("seed", SEEDS)
def test_product_form_matches_enumeration(seed):
    ds, Y = fixture(seed)
    model = th.ThresholdModel(ds, Y)
    oracle = Enumeration(ds, Y)
    for lam in (0.0, 0.7, 4.0, 35.0):
        assert model.log_partition(lam) == pytest.approx(oracle.log_partition(lam), abs=1e-10)


@pytest.mark.parametrize("seed", SEEDS)
def test_gibbs_prediction_matches_enumeration(seed):
    ds, Y = fixture(seed)
    model = th.ThresholdModel(ds, Y)
    rng = np.random.default_rng(1000 + seed)
    for _ in range(2):
        x = np.round(rng.uniform(0.02, 0.98, ds.patterns.shape[1]), 2)
        oracle = Enumeration(ds, Y, extra=[x])
        for lam in (0.5, 6.0):
            got = model.predict(x, "gibbs", lam)
            np.testing.assert_allclose(got, oracle.predict(lam, x), atol=1e-10)
            assert got.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_mgf_with_reference_matches_enumeration(seed):
    ds, Y = fixture(seed)
    model = th.ThresholdModel(ds, Y)
    oracle = Enumeration(ds, Y)
    rng = np.random.default_rng(seed)
    cell = int(rng.integers(model.n_cells))
    table = rng.integers(0, Y, model.n_codes)
    ref = model.reference_errors(cell, table)
    for lam, xi in ((0.0, 1.0), (3.0, 2.5), (20.0, 10.0)):
        assert model.mgf_with_reference(lam, xi, cell, table) == pytest.approx(oracle.mgf(lam, xi, ref), abs=1e-10)
    assert model.mgf_with_reference(2.0, 0.0, cell, table) == pytest.approx(model.log_partition(2.0), abs=1e-12)
    vals = [model.mgf_with_reference(2.0, xi, cell, table) for xi in (0, 1, 5, 20)]
    assert np.all(np.diff(vals) >= -1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_explicit_finite_class_agrees(seed):
    ds, Y = fixture(seed)
    model = th.ThresholdModel(ds, Y)
    from pacbound import finite_model as fm
    cls, _ = model.to_finite_class()
    for lam in (1.0, 10.0):
        assert fm.log_partition(cls, lam) == pytest.approx(model.log_partition(lam), abs=1e-10)
        assert fm.gibbs_risk(cls, lam) == pytest.approx(model.gibbs_risk(lam), abs=1e-10)


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0, 100.0])
def test_gibbs_risk_matches_finite_differences(seed, lam):
    rng = np.random.default_rng(seed)
    ds = th.LabeledDataset(rng.uniform(0.01, 0.99, (25, 2)), rng.integers(0, 2, 25))
    model = th.ThresholdModel(ds)
    step = 1e-5 * max(1.0, lam)
    fd = -(model.log_partition(lam + step) - model.log_partition(lam - step)) / (2 * step)
    assert model.gibbs_risk(lam) == pytest.approx(fd, abs=1e-6)


def test_gibbs_risk_nonincreasing_and_limits():
    rng = np.random.default_rng(3)
    ds = th.LabeledDataset(rng.uniform(0.01, 0.99, (30, 2)), rng.integers(0, 3, 30))
    model = th.ThresholdModel(ds)
    lams = np.geomspace(0.01, 1e5, 40)
    risks = [model.gibbs_risk(l) for l in lams]
    assert np.all(np.diff(risks) <= 1e-10)
    assert model.gibbs_risk(0.0) == pytest.approx(2 / 3)
    assert risks[-1] == pytest.approx(model.min_risk(), abs=1e-6)
    assert model.log_partition(0.0) == pytest.approx(0.0, abs=1e-12)


def test_cell_counts():
    one = th.ThresholdModel(th.LabeledDataset([[0.5]], [0]))
    assert one.n_cells == 2
    three = th.ThresholdModel(th.LabeledDataset([[0.2, 0.3], [0.5, 0.6], [0.7, 0.8]], [0, 1, 0]))
    assert three.n_cells == 16
    dup = th.ThresholdModel(th.LabeledDataset([[0.2, 0.3], [0.5, 0.3], [0.7, 0.8]], [0, 1, 0]))
    assert dup.n_cells == 12


def test_counter_invariants():
    ds, Y = fixture(5)
    model = th.ThresholdModel(ds, Y)
    b = model.b()
    np.testing.assert_allclose(b.sum(axis=(1, 2)), 1.0)
    assert math.fsum(math.exp(v) for v in model.log_L) == pytest.approx(1.0, abs=1e-9)
    assert model.n_cells <= (model.N + 1) ** model.h


def test_kl_of_cell_bound():
    rng = np.random.default_rng(0)
    ds = th.LabeledDataset(rng.uniform(0.01, 0.99, (20, 2)), rng.integers(0, 2, 20))
    model = th.ThresholdModel(ds)
    _, de, agg = model.gibbs_statistics(5.0)
    assert agg["min_cell_kl"] <= 2 * math.log(21) + 4 * math.log(2)
    assert de >= 0
    assert model.kl_of_cell(0) == pytest.approx(-model.log_L[0] + 4 * math.log(2))


def test_symmetric_prediction():
    ds = th.LabeledDataset([[0.2], [0.4], [0.6], [0.8]], [0, 0, 1, 1])
    mirror = th.LabeledDataset([[0.2], [0.4], [0.6], [0.8]], [1, 1, 0, 0])
    for lam in (0.3, 5.0, 50.0):
        p = th.ThresholdModel(ds).predict([0.5], "gibbs", lam)
        q = th.ThresholdModel(mirror).predict([0.5], "gibbs", lam)
        # relabeling equivariance, then mirror symmetry about 0.5 ties the two together
        np.testing.assert_allclose(p, q[::-1], atol=1e-12)
        # the mirror of ds is ds with labels swapped, so 0.5 is a symmetry point
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-12)


def test_relabeling_equivariance():
    rng = np.random.default_rng(4)
    X = rng.uniform(0.01, 0.99, (12, 2))
    y = rng.integers(0, 3, 12)
    perm = np.array([2, 0, 1])
    a = th.ThresholdModel(th.LabeledDataset(X, y), 3).predict([0.4, 0.6], "gibbs", 3.0)
    b = th.ThresholdModel(th.LabeledDataset(X, perm[y]), 3).predict([0.4, 0.6], "gibbs", 3.0)
    np.testing.assert_allclose(b[perm], a, atol=1e-12)


def test_cell_posterior_far_inside_is_dirac():
    ds = th.LabeledDataset([[0.2], [0.8]], [0, 1])
    model = th.ThresholdModel(ds)
    # cell 1 is (0.2, 0.8); x = 0.9 exceeds every threshold in it
    np.testing.assert_allclose(model.predict([0.9], "cell", cell_index=1, table=[0, 1]), [0, 1])
    np.testing.assert_allclose(model.predict([0.5], "cell", cell_index=1, table=[0, 1]), [0.5, 0.5])


def test_randomization_is_rare():
    rng = np.random.default_rng(11)
    N, h, trials = 60, 2, 400
    non_dirac = 0
    for _ in range(trials):
        X = rng.uniform(0.01, 0.99, (N + 1, h))
        model = th.ThresholdModel(th.LabeledDataset(X[:N], np.zeros(N, int)), 2)
        cell = int(rng.integers(model.n_cells))
        p = model.predict(X[N], "cell", cell_index=cell, table=[0, 1, 0, 1])
        non_dirac += int(np.max(p) < 1 - 1e-12)
    assert non_dirac / trials <= 3 * 2 * h / (N + 1)


def test_transductive_variant():
    rng = np.random.default_rng(2)
    N, k, h = 8, 2, 2
    X = rng.uniform(0.01, 0.99, (N, h))
    y = rng.integers(0, 2, N)
    shadow = rng.uniform(0.01, 0.99, (k * N, h))
    ds = th.LabeledDataset(X, y)
    tv = th.transductive_variant(ds, shadow)
    assert tv.n_cells <= ((k + 1) * N + 1) ** h
    assert math.fsum(np.exp(tv.log_L)) == pytest.approx(1.0)
    np.testing.assert_allclose(np.exp(tv.log_L), 1 / tv.n_cells)
    assert tv.kl_upper() <= h * math.log((k + 1) * N + 1) + 2**h * math.log(2) + 1e-12
    base = th.ThresholdModel(ds)
    # training risk of a threshold vector is the same in both models
    t = rng.uniform(0.01, 0.99, h)
    table = [0, 1, 1, 0]
    cb = tuple(int(np.searchsorted(base.boundaries[j], t[j]) - 1) for j in range(h))
    ct = tuple(int(np.searchsorted(tv.boundaries[j], t[j]) - 1) for j in range(h))
    ib = int(np.flatnonzero((base.cells == cb).all(axis=1))[0])
    it = int(np.flatnonzero((tv.cells == ct).all(axis=1))[0])
    assert base.risks(ib, table) == tv.risks(it, table)
    empty = th.transductive_variant(ds, np.empty((0, h)))
    assert empty.shape == base.shape


def test_bounds_on_threshold_model():
    rng = np.random.default_rng(5)
    ds = th.LabeledDataset(rng.uniform(0.01, 0.99, (40, 1)), (rng.uniform(size=40) > 0.5).astype(int))
    model = th.ThresholdModel(ds)
    v = th.gibbs_deviation_bound(model, 10.0, 0.05)
    assert model.gibbs_risk(10.0) < v <= 1.0
    nl, lin = th.gibbs_local_bound(model, 0.05, 0.5, 0.1)
    assert nl <= lin
    with pytest.raises(DomainError):
        th.gibbs_deviation_bound(model, 10.0, 0.0)


def test_csv_ingestion():
    ds = th.LabeledDataset.from_csv("x1,x2,label\n0.1,0.2,1\n0.3,0.4,2\n")
    assert ds.labels.tolist() == [0, 1]
    with pytest.raises(IngestionError, match="line 3"):
        th.LabeledDataset.from_csv("0.1,0.2,1\n0.3,0.4,2\n0.3,1.4,2\n")
    with pytest.raises(IngestionError, match="line 2"):
        th.LabeledDataset.from_csv("0.1,0.2,1\n0.3,abc,2\n")
    with pytest.raises(IngestionError):
        th.LabeledDataset.from_csv("0.1,0.2,0\n")
    with pytest.raises(IngestionError):
        th.LabeledDataset([[0.0]], [0])


def test_h_cap():
    with pytest.raises(DomainError):
        th.ThresholdModel(th.LabeledDataset(np.full((1, 13), 0.5), [0]))
