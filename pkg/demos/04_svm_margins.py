"""Support vector machines, margins and the bounds they feed.

Trains hard-margin SVMs on two Gaussian clouds, turns the margin into a
dimension, and compares the transductive, compression and inductive bounds.
"""

import math

import numpy as np

from pacbound import svm
from pacbound import transductive as tr

rng = np.random.default_rng(0)


def clouds(n, sep):
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    X = rng.standard_normal((n, 2)) * 0.4
    X[:, 0] += y * sep / 2
    return X, y


# %% Regular simplex: the margin inequality Var / gamma^2 >= n - 1 is tight.
for n in (2, 4, 6):
    S = np.eye(n) - 1.0 / n
    S /= math.sqrt(svm.variance(S))
    sol = svm.train(svm.Linear(), S, np.array([1.0, -1.0] * (n // 2)))
    print(f"simplex n={n}: Var/gamma^2 = {svm.variance(S) / sol.margin**2:.6f}, "
          f"dimension from margin = {svm.margin_to_dimension(sol.margin, 1.0)}")

# %% Wider separation, larger margin, smaller bound.
N, k = 200, 4
for sep in (3.0, 4.0, 6.0):
    X, y = clouds((k + 1) * N, sep)
    keep = y * X[:, 0] > 0.2
    X, y = X[keep], y[keep]
    res = svm.transductive_svm_pipeline(svm.Linear(), X[:N], y[:N], X[N:N + k * N])
    print(f"\nseparation {sep}: margin {res.margin:.3f}, h = {res.h}, transductive bound {res.bound:.4f}")

    sol = svm.train(svm.Linear(), X[:N], y[:N])
    size = sol.support_set.size
    comp, _ = tr.transductive_bound(tr.VapnikQuery(N, 0.0, size, eps=0.01), k)
    print(f"   {size} support vectors, compression bound {comp:.4f}")

    w = (sol.alpha * y[:N]) @ X[:N]
    R_max = 2.0 ** math.ceil(math.log2(np.linalg.norm(X[:N], axis=1).max()))
    mb = svm.inductive_margin_bound(X[:N], y[:N], w, sol.bias, R_max, {R_max: 0.5}, 0.01, k)
    # Vacuous at this sample size: the band 4 R_max gamma_h only clears the
    # data once h is large, and then the covering term exceeds N.
    print(f"   inductive margin bound {mb.bound:.5f} at h = {mb.h}" + (" (vacuous)" if mb.bound >= 1 else ""))

# %% A Gaussian kernel separates XOR, which no line can.
X = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
y = np.array([1.0, 1.0, -1.0, -1.0])
print(f"\nXOR, linear kernel:   {svm.train(svm.Linear(), X, y).status}")
print(f"XOR, gaussian kernel: {svm.train(svm.Gaussian(0.5), X, y).status}")
