"""Classification by coordinate thresholds, computed exactly.

Two features, three labels. The posterior over (thresholds, response table)
pairs has |Y|^(2^h) tables per cell, but every quantity below is computed in
product form without enumerating them.
"""

import numpy as np

from pacbound import threshold as th

rng = np.random.default_rng(3)
N = 80
X = rng.uniform(0.01, 0.99, (N, 2))
labels = (X[:, 0] > 0.5).astype(int) + (X[:, 1] > 0.6).astype(int)
flip = rng.random(N) < 0.1
labels[flip] = rng.integers(0, 3, flip.sum())

model = th.build(th.LabeledDataset(X, labels), label_count=3)
print(model.summary_json())

# %% Gibbs risk decreases with lambda and approaches the best cell.
for lam in (1, 10, 50, 200, 1000):
    print(f"lambda {lam:5d}: Gibbs risk {model.gibbs_risk(lam):.4f}")
print(f"best achievable      {model.min_risk():.4f}")

# %% Bounds on the Gibbs classifier.
for lam in (20.0, 50.0, 100.0):
    print(f"deviation bound at lambda {lam:5.0f}: {th.gibbs_deviation_bound(model, lam, 0.05):.4f}")
nl, lin = th.gibbs_local_bound(model, 0.05, 0.5, 0.1)
print(f"local bound: {nl:.4f} (linear {lin:.4f})")

# %% Predictions for a few new points: label distributions under the Gibbs posterior.
for x in ([0.2, 0.2], [0.8, 0.2], [0.8, 0.9], [0.5, 0.6]):
    p = model.predict(x, "gibbs", 50.0)
    print(f"x = {x}: {np.round(p, 3)}")
