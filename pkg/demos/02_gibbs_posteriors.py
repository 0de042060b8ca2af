"""Gibbs posteriors on a finite class of classifiers.

A random class of 40 classifiers is scored on 1000 examples. We look at how the
Gibbs posterior concentrates as the inverse temperature grows, how large the
empirical dimension is, and what the localized bounds certify.
"""

import numpy as np

from pacbound import finite_model as fm
from pacbound import local_bounds as lb
from pacbound import nonlocal_bounds as nb
from pacbound import relative as rel

rng = np.random.default_rng(7)
N, H = 1000, 40
true_error = rng.uniform(0.1, 0.45, H)
losses = (rng.random((N, H)) < true_error).astype(int)
model = fm.FiniteHypothesisClass.uniform(losses)
print(f"best empirical risk {model.min_risk():.3f}, mean {model.risks.mean():.3f}")

# %% Concentration. K(gibbs, prior) grows like log H at most.
for lam in (1, 10, 100, 1000):
    g = fm.gibbs(model, lam)
    print(f"lambda {lam:5d}: Gibbs risk {fm.gibbs_risk(model, lam):.4f}, "
          f"KL to prior {fm.kl(g, model.prior):.3f}, largest weight {g.probs.max():.3f}")

# %% Empirical dimension: how many 'effective parameters' the data sees.
de = fm.empirical_dimension(model)
print(f"\nempirical dimension {de:.3f}  (log H = {np.log(H):.3f})")

# %% Non-local versus local bounds for the Gibbs posterior at lambda = 100.
g = fm.gibbs(model, 100.0)
q = nb.ScalarBoundQuery(N, g.mean(model.risks), eps=0.05)
print(f"\nnon-local deviation  {nb.deviation_bound(q, fm.kl(g, model.prior), 100.0):.4f}")
alpha = -np.expm1(-100.0 / N)
nl, M, _ = lb.local_deviation(lb.LocalBoundQuery(model, 0.05, alpha=alpha, gamma=0.05))
print(f"local deviation      {nl:.4f} (linear {M:.4f})")

# %% Effective temperature: the largest beta whose Gibbs risk is certified to be
# no better than the posterior we actually use.
# The certificate is conservative: beta_hat sits far below lambda and is 0
# (no certificate) when the posterior is too close to the prior.
print()
for lam in (5.0, 20.0, 100.0):
    est = rel.effective_temperature(model, 0.5, fm.gibbs(model, lam))
    print(f"posterior at lambda {lam:5.0f}: effective temperature >= {est.beta_hat}")
