"""Worked numbers: closed-form bounds at N = 1000.

Run with ``python demos/01_worked_examples.py``. Each block evaluates one bound
family and prints the value next to the figure it is meant to reproduce.
"""

from pacbound import local_bounds as lb
from pacbound import nonlocal_bounds as nb
from pacbound import registry
from pacbound import transductive as tr

# %% A single classifier with empirical risk 0.2 on 1000 examples.
# With no complexity term the deviation bound only pays for the confidence level.
q = nb.ScalarBoundQuery(N=1000, q=0.2, eps=0.01)
value, lam = nb.optimized_deviation_bound(q, kl=0.0)
print(f"deviation bound      {value:.4f}  at lambda = {lam:.1f}")

# The optimum is flat: moving lambda by 20% barely changes the bound.
for scale in (0.8, 1.0, 1.2):
    print(f"   lambda x {scale:.1f}  ->  {nb.deviation_bound(q, 0.0, scale * lam):.5f}")

# %% Ten nats of complexity. The tight bound beats its Gaussian closed form.
q10 = nb.ScalarBoundQuery(N=1000, q=0.2, d=10)
tight, _ = nb.optimized_unbiased_bound(q10)
print(f"\nunbiased, tight      {tight:.4f}")
print(f"unbiased, sqrt form  {nb.sqrt_bound(q10):.4f}")

# %% Localization: replace the prior with a Gibbs measure.
nonlinear, linear = lb.local_deviation_from_dimension(1000, 10, 0.2, 0.01, 0.5, 0.1)
print(f"\nlocal bound          {nonlinear:.4f} (linear form {linear:.4f})")

# %% VC-type bounds for h = 10 and training error 0.2.
query = tr.VapnikQuery(N=1000, r1=0.2, h=10, eps=0.01)
res = tr.inductive_bound(query)
print(f"\ninductive bound      {res.bound:.4f}  (k* = {res.k_star}, lambda* = {res.lambda_star:.0f})")
print(f"classical Vapnik     {tr.vapnik_classical(query):.4f}")

# The shadow sample size matters: small k is expensive, beyond ~15 it is flat.
for k in (1, 2, 5, 15, 40):
    print(f"   shadow k = {k:2d}:  {tr.transductive_bound(query, k)[0]:.4f}")

# %% Everything at once, compared against the published figures.
print()
for ex in registry.EXAMPLES:
    r = ex.run()
    print(f"{ex.id:28s} expected {ex.expected:<7} got {r.value:.6f}  {'ok' if r.passed else 'MISS'}")
