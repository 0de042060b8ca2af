"""Classification by thresholding each coordinate, with exact Gibbs computations.

A hypothesis is a pair (t, a): thresholds t in (0,1)^h and a response table a
mapping each of the 2^h binary codes [1(x^j >= t_j)]_j to a label. The prior is
Lebesgue measure on thresholds times the uniform distribution on tables.

Thresholds only matter through the cell of the grid of distinct training
values they fall in, and for a fixed cell the answers of the table at different
codes are independent under the Gibbs posterior. This gives product-form
partition functions that never enumerate the |Y|^{2^h} tables.
"""

import csv
import hashlib
import io
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import finite_model as fm
from .errors import DomainError, IngestionError

MAX_H = 12
MAX_COUNTER_CELLS = 50_000_000


@dataclass(frozen=True)
class LabeledDataset:
    """Patterns (N x h, entries in (0,1)) and labels in {0, ..., |Y|-1}."""

    patterns: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.patterns, dtype=float)
        y = np.asarray(self.labels, dtype=int).ravel()
        if X.ndim != 2:
            raise IngestionError("patterns must be a 2-d array")
        if X.shape[0] != y.shape[0]:
            raise IngestionError("patterns and labels disagree in length")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise IngestionError("need at least one pattern and one coordinate")
        if np.any(~((X > 0) & (X < 1))):
            raise IngestionError("pattern coordinates must lie strictly inside (0, 1)")
        if np.any(y < 0):
            raise IngestionError("labels must be non-negative")
        object.__setattr__(self, "patterns", X)
        object.__setattr__(self, "labels", y)

    @classmethod
    def from_csv(cls, text):
        """Rows: h feature columns then an integer label in 1..|Y|; a header row is optional."""
        rows, labels = [], []
        width = None
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row[:-1]]
                lab = int(row[-1])
            except ValueError as exc:
                if lineno == 1 and not rows:
                    continue
                raise IngestionError(f"cannot parse row {row!r}", lineno) from exc
            if width is None:
                width = len(vals)
            if len(vals) != width or width == 0:
                raise IngestionError("inconsistent number of columns", lineno)
            if any(not 0 < v < 1 for v in vals):
                raise IngestionError("feature values must lie strictly inside (0, 1)", lineno)
            if lab < 1:
                raise IngestionError("labels must be integers >= 1", lineno)
            rows.append(vals)
            labels.append(lab - 1)
        if not rows:
            raise IngestionError("no data rows")
        return cls(np.array(rows), np.array(labels))


def _grid(values):
    """Sorted distinct values and the cell boundaries 0 < v_1 < ... < v_m < 1."""
    v = np.unique(values)
    return v, np.concatenate(([0.0], v, [1.0]))


class ThresholdModel:
    """Cell decomposition, counters and exact Gibbs quantities.

    Cells along coordinate j are the open intervals between consecutive
    boundaries; a threshold in cell l gives response 1 on a training value of
    (0-based) rank rho exactly when rho >= l.
    """

    def __init__(self, dataset, label_count=None, boundary_patterns=None, weights="lebesgue"):
        X, y = dataset.patterns, dataset.labels
        N, h = X.shape
        if h > MAX_H:
            raise DomainError(f"h = {h} exceeds the cap of {MAX_H} coordinates")
        Y = int(y.max()) + 1 if label_count is None else int(label_count)
        if Y < 1 or y.max() >= Y:
            raise DomainError("labels exceed label_count")
        allX = X if boundary_patterns is None else np.vstack([X, np.asarray(boundary_patterns, dtype=float)])
        if np.any(~((allX > 0) & (allX < 1))):
            raise DomainError("pattern coordinates must lie strictly inside (0, 1)")
        self.N, self.h, self.label_count = N, h, Y
        self.labels = y
        self.weights_mode = weights
        self.values, self.boundaries, self.cell_log_weights = [], [], []
        ranks = np.empty((N, h), dtype=np.int64)
        for j in range(h):
            v, b = _grid(allX[:, j])
            self.values.append(v)
            self.boundaries.append(b)
            ranks[:, j] = np.searchsorted(v, X[:, j])
            if weights == "lebesgue":
                self.cell_log_weights.append(np.log(np.diff(b)))
            elif weights == "uniform":
                self.cell_log_weights.append(np.full(v.size + 1, -math.log(v.size + 1)))
            else:
                raise DomainError(f"unknown weights {weights!r}")
        self.ranks = ranks
        self.shape = tuple(v.size + 1 for v in self.values)
        n_cells = int(np.prod(self.shape, dtype=float))
        self.n_codes = 2**h
        if n_cells * self.n_codes * Y > MAX_COUNTER_CELLS:
            raise DomainError(f"{n_cells} cells x {self.n_codes} codes x {Y} labels is too large for exact enumeration")
        self.cells = np.array(list(itertools.product(*[range(s) for s in self.shape])), dtype=np.int64)
        self.log_L = sum(self.cell_log_weights[j][self.cells[:, j]] for j in range(h))
        self.codes = self._codes(self.cells)
        idx = (np.arange(n_cells)[:, None] * self.n_codes + self.codes) * Y + y[None, :]
        self.counts = np.bincount(idx.ravel(), minlength=n_cells * self.n_codes * Y).reshape(n_cells, self.n_codes, Y)

    @classmethod
    def build(cls, dataset, label_count=None):
        return cls(dataset, label_count)

    def _codes(self, cells):
        codes = np.zeros((cells.shape[0], self.N), dtype=np.int64)
        for j in range(self.h):
            codes |= (self.ranks[:, j][None, :] >= cells[:, j][:, None]).astype(np.int64) << j
        return codes

    @property
    def n_cells(self):
        return self.cells.shape[0]

    def b(self):
        """Counters b_y^t(c) = #{i : Y_i = y, code_i = c} / N, shape (cells, codes, labels)."""
        return self.counts / self.N

    def risks(self, cell_index, table):
        """Empirical risk of hypothesis (cell, table)."""
        c = self.counts[cell_index]
        return float((c.sum(axis=1) - c[np.arange(self.n_codes), table]).sum() / self.N)

    def min_risk(self):
        c = self.counts
        return float(((c.sum(axis=2) - c.max(axis=2)).sum(axis=1)).min() / self.N)

    def _factor_logs(self, lam, xi=0.0, extra=None):
        """log of (1/|Y|) sum_y exp(-lam (b - b_y) + xi bbar_y) for every cell and code."""
        b = self.b()
        excess = b.sum(axis=2, keepdims=True) - b
        expo = -lam * excess
        if extra is not None:
            expo = expo + xi * extra
        return logsumexp(expo, axis=2) - math.log(self.label_count), expo

    def log_partition(self, lam):
        """log pi[exp(-lam r)] in product form."""
        logs, _ = self._factor_logs(lam)
        return float(logsumexp(self.log_L + logs.sum(axis=1)))

    def _posterior_parts(self, lam):
        logs, expo = self._factor_logs(lam)
        lw = self.log_L + logs.sum(axis=1)
        w = np.exp(lw - logsumexp(lw))
        soft = np.exp(expo - logsumexp(expo, axis=2, keepdims=True))
        return w, soft

    def gibbs_risk(self, lam):
        """pi_{exp(-lam r)}(r) from the per-factor softmax means."""
        w, soft = self._posterior_parts(lam)
        b = self.b()
        excess = b.sum(axis=2, keepdims=True) - b
        per_cell = (soft * excess).sum(axis=(1, 2))
        return float(w @ per_cell)

    def empirical_dimension(self, polish=True):
        """sup_beta beta [pi_{exp(-beta r)}(r) - min r] over the package's geometric beta grid."""
        r0 = self.min_risk()
        beta_max = min(1e7 * self.N, 800.0 * self.N)
        n = int(np.ceil(np.log(beta_max / fm.BETA_MIN) / np.log(fm.BETA_RATIO))) + 1
        grid = fm.BETA_MIN * fm.BETA_RATIO ** np.arange(n)
        vals = np.array([b * (self.gibbs_risk(b) - r0) for b in grid])
        i = int(np.argmax(vals))
        best = max(0.0, float(vals[i]))
        if polish and vals[i] > 0:
            from scipy.optimize import minimize_scalar
            step = math.log(fm.BETA_RATIO)
            res = minimize_scalar(lambda t: -math.exp(t) * (self.gibbs_risk(math.exp(t)) - r0),
                                  bounds=(math.log(grid[i]) - step, math.log(grid[i]) + step), method="bounded",
                                  options={"xatol": 1e-10})
            best = max(best, float(-res.fun))
        return best

    def kl_of_cell(self, cell_index):
        """K(rho_{t,a}, pi) = -log L(cell) + 2^h log |Y| for the posterior uniform on the cell."""
        return float(-self.log_L[cell_index] + self.n_codes * math.log(self.label_count))

    def kl_upper(self):
        """h log(n + 1) + 2^h log |Y|, n the number of boundary points per coordinate (at most)."""
        n = max(v.size for v in self.values)
        return self.h * math.log(n + 1) + self.n_codes * math.log(self.label_count)

    def gibbs_statistics(self, lam, with_dimension=True):
        """(risk, d_e, kl_aggregates) of the Gibbs posterior at lam."""
        risk = self.gibbs_risk(lam)
        logz = self.log_partition(lam)
        de = self.empirical_dimension() if with_dimension else math.nan
        aggregates = {
            "kl_gibbs_to_prior": max(0.0, -lam * risk - logz),
            "min_cell_kl": float(min(self.kl_of_cell(i) for i in range(self.n_cells))),
            "kl_bound": self.kl_upper(),
        }
        return risk, de, aggregates

    def reference_errors(self, cell_index, table):
        """0/1 training errors of hypothesis (cell, table)."""
        pred = np.asarray(table)[self.codes[cell_index]]
        return (pred != self.labels).astype(float)

    def mgf_with_reference(self, lam, xi, cell_index, table):
        """log pi[exp(-lam r + xi m'(., theta_ref))] with theta_ref = (cell, table)."""
        e_ref = self.reference_errors(cell_index, table)
        Y = self.label_count
        n_cells = self.n_cells
        bbar = np.empty((n_cells, self.n_codes, Y))
        base = np.arange(n_cells)[:, None] * self.n_codes + self.codes
        for yy in range(Y):
            w = np.abs((self.labels != yy).astype(float) - e_ref)
            bbar[:, :, yy] = np.bincount(base.ravel(), weights=np.broadcast_to(w, base.shape).ravel(),
                                         minlength=n_cells * self.n_codes).reshape(n_cells, self.n_codes)
        logs, _ = self._factor_logs(lam, xi, bbar / self.N)
        return float(logsumexp(self.log_L + logs.sum(axis=1)))

    def _split(self, x):
        """P(x_j >= t_j) for t_j uniform on each cell of coordinate j."""
        out = []
        for j in range(self.h):
            b = self.boundaries[j]
            lo, hi = b[:-1], b[1:]
            out.append(np.clip((x[j] - lo) / (hi - lo), 0.0, 1.0))
        return out

    def _code_probs(self, cells, x):
        split = self._split(x)
        P = np.ones((cells.shape[0], self.n_codes))
        for c in range(self.n_codes):
            for j in range(self.h):
                p = split[j][cells[:, j]]
                P[:, c] *= p if (c >> j) & 1 else 1 - p
        return P

    def predict(self, x, mode="gibbs", lam=None, cell_index=None, table=None):
        """Label distribution for a new pattern x.

        mode "cell": posterior uniform on a cell with response table ``table``;
        mode "gibbs": Gibbs posterior at ``lam``.
        """
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.h,) or np.any(~((x > 0) & (x < 1))):
            raise DomainError("pattern must lie in (0,1)^h")
        Y = self.label_count
        if mode == "cell":
            P = self._code_probs(self.cells[[cell_index]], x)[0]
            out = np.zeros(Y)
            np.add.at(out, np.asarray(table), P)
            return out
        if mode != "gibbs" or lam is None:
            raise DomainError("gibbs mode needs lam")
        w, soft = self._posterior_parts(lam)
        P = self._code_probs(self.cells, x)
        out = np.einsum("t,tc,tcy->y", w, P, soft)
        return out / out.sum()

    def to_finite_class(self):
        """Explicit FiniteHypothesisClass over all (cell, table) pairs (small instances only).

        Hypotheses are ordered cell-major, tables in lexicographic order. Tables
        share the cell's Lebesgue weight equally.
        """
        Y, K = self.label_count, self.n_codes
        n_tab = Y**K
        if self.n_cells * n_tab > 200_000:
            raise DomainError("too many hypotheses to enumerate")
        tables = np.array(list(itertools.product(range(Y), repeat=K)), dtype=np.int64)
        cols, lw = [], []
        for t in range(self.n_cells):
            pred = tables[:, self.codes[t]]
            cols.append((pred != self.labels[None, :]).T)
            lw.append(np.full(n_tab, self.log_L[t] - K * math.log(Y)))
        L = np.hstack(cols).astype(np.int8)
        lw = np.concatenate(lw)
        return fm.FiniteHypothesisClass(lw - logsumexp(lw), L), tables

    def summary(self):
        return {
            "h": self.h,
            "N": self.N,
            "labels": self.label_count,
            "cells": self.n_cells,
            "weights": self.weights_mode,
            "counters_sha256": hashlib.sha256(np.ascontiguousarray(self.counts, dtype=np.int64).tobytes()).hexdigest(),
            "kl_bound": self.kl_upper(),
            "min_risk": self.min_risk(),
        }

    def summary_json(self):
        return json.dumps(self.summary(), sort_keys=True)


def build(dataset, label_count=None):
    return ThresholdModel(dataset, label_count)


def transductive_variant(dataset, shadow_patterns, label_count=None):
    """Model whose cells come from training plus shadow patterns, with the uniform prior on cells."""
    shadow = np.asarray(shadow_patterns, dtype=float).reshape(-1, dataset.patterns.shape[1])
    return ThresholdModel(dataset, label_count, boundary_patterns=shadow, weights="uniform")


def gibbs_deviation_bound(model, lam, eps):
    """Phi^{-1}_{lam/N}(rho(r) + (K(rho, pi) - log eps)/lam) for rho the Gibbs posterior at lam."""
    from .kernels import phi_inv

    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    if lam <= 0:
        raise DomainError("lambda must be positive")
    risk, _, agg = model.gibbs_statistics(lam, with_dimension=False)
    return phi_inv(lam / model.N, risk + (agg["kl_gibbs_to_prior"] - math.log(eps)) / lam)


def gibbs_local_bound(model, eps, alpha, gamma):
    """Localized deviation bound for the Gibbs posterior at lam = -N log(1 - alpha).

    The Gibbs-risk integral from beta = N log(1 + gamma) to lam is
    log Z(beta) - log Z(lam). Returns (nonlinear, linear).
    """
    from .local_bounds import _check_alpha_gamma, _nonlinear_root

    _check_alpha_gamma(alpha, gamma)
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    N = model.N
    lam = -N * math.log1p(-alpha)
    beta = N * math.log1p(gamma)
    integral = model.log_partition(beta) - model.log_partition(lam)
    M = (integral - 2 * math.log(eps)) / (N * (alpha - gamma))
    return _nonlinear_root(alpha, gamma, M), M
