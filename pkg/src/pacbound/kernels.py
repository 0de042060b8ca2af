"""Scalar special functions used by the bounds.

All functions take plain floats. Exponential/log composites go through
``log1p``/``expm1`` and small exponents use a short Taylor series, so the
a -> 0 limits are continuous.
"""

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

from .errors import BoundUndefined, DomainError

_SMALL = 1e-6
_XTOL = 1e-14
_MAXITER = 200


def _check_finite(**kw):
    for name, value in kw.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value}")


def phi(a, p):
    """Phi_a(p) = -log(1 - p(1 - e^{-a})) / a, an increasing bijection of [0, 1]."""
    _check_finite(a=a, p=p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if abs(a) < _SMALL:
        c = p * (p - 1.0)
        return p + a * c / 2 + a * a * c * (2 * p - 1) / 6 + a**3 * c * (6 * p * p - 6 * p + 1) / 24
    return -math.log1p(p * math.expm1(-a)) / a


def phi_inv(a, q):
    """Inverse of ``phi``: (1 - e^{-aq}) / (1 - e^{-a}), extended to every real q."""
    _check_finite(a=a, q=q)
    if abs(a) < _SMALL:
        c = q * (q - 1.0)
        return q - a * c / 2 + a * a * c * (2 * q - 1) / 12 - a**3 * c * c / 24
    return math.expm1(-a * q) / math.expm1(-a)


def psi(a, p, m):
    """Psi_a(p, m) = -log(1 - sinh(a) (p - m tanh(a/2))) / a.

    Raises BoundUndefined when the log argument is not positive.
    """
    _check_finite(a=a, p=p, m=m)
    if a == 0.0:
        return p
    arg = math.sinh(a) * (p - m * math.tanh(a / 2))
    if arg >= 1.0:
        raise BoundUndefined("log argument of psi is not positive")
    return -math.log1p(-arg) / a


def phi_tilde(a, b, p):
    """(Phi_a(p) - b p) / (1 - b)."""
    _check_finite(a=a, b=b, p=p)
    if b >= 1.0:
        raise DomainError(f"b must be < 1, got {b}")
    return (phi(a, p) - b * p) / (1.0 - b)


def phi_tilde_inv(a, b, y):
    """Solve phi_tilde(a, b, p) = y for p in [0, 1].

    The forward map is a bijection of [0, 1] when b <= (1 - e^{-a})/a. Values of
    y above 1 are clipped to 1 and below 0 to 0.
    """
    _check_finite(a=a, b=b, y=y)
    if b >= 1.0:
        raise DomainError(f"b must be < 1, got {b}")
    if y <= 0.0:
        return 0.0
    if y >= 1.0:
        return 1.0
    return brentq(lambda p: phi_tilde(a, b, p) - y, 0.0, 1.0, xtol=_XTOL, rtol=4 * np.finfo(float).eps,
                  maxiter=_MAXITER)


def f_gamma_alpha(gamma, alpha, N, x):
    """F(x) = -N log(1 - tanh(gamma/N) x) - alpha x."""
    _check_finite(gamma=gamma, alpha=alpha, x=x)
    t = math.tanh(gamma / N)
    if t * x >= 1.0:
        raise DomainError("tanh(gamma/N) * x must be < 1")
    return -N * math.log1p(-t * x) - alpha * x


def f_gamma_alpha_inv(gamma, alpha, N, y):
    """Largest x in [0, 1/tanh(gamma/N)) with F(x) <= y.

    When alpha < N tanh(gamma/N) this is the ordinary inverse of the increasing
    map F on the half line.
    """
    _check_finite(gamma=gamma, alpha=alpha, y=y)
    if y < 0.0:
        raise DomainError(f"F is inverted only on [0, inf), got y={y}")
    t = math.tanh(gamma / N)
    if t <= 0.0:
        raise DomainError("gamma must be positive")
    # F'(x) = N t / (1 - t x) - alpha vanishes at x0; F decreases before x0.
    x0 = max(0.0, (1.0 - N * t / alpha) / t) if alpha > 0 else 0.0
    if y == 0.0 and x0 == 0.0:
        return 0.0
    hi = 1.0 / t
    g = lambda x: f_gamma_alpha(gamma, alpha, N, x) - y
    # push hi inward until F(hi) is finite and above y
    upper = x0 + 0.5 * (hi - x0)
    while g(upper) < 0.0:
        upper = upper + 0.5 * (hi - upper)
        if hi - upper < 1e-15 * hi:
            return upper
    return brentq(g, x0, upper, xtol=_XTOL, rtol=4 * np.finfo(float).eps, maxiter=_MAXITER)


def log_cosh(x):
    """Stable log(cosh(x))."""
    x = abs(x)
    if x < 1.0:
        return math.log1p(2 * math.sinh(x / 2) ** 2)
    return x + math.log1p(math.exp(-2 * x)) - math.log(2.0)


def a_of_lambda(lam, N):
    """A(lambda) = (2N/lambda) log cosh(lambda / 2N)."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    return 2 * N / lam * log_cosh(lam / (2 * N))


def xi_map(a, q):
    """Xi_a(q) = (1 - e^{-aq}) / tanh(a)."""
    return -math.expm1(-a * q) / math.tanh(a)


def binom_tail(n, h):
    """log sum_{k<=h} C(n, k), computed in log space."""
    if h < 0 or h > n:
        raise DomainError(f"need 0 <= h <= n, got h={h}, n={n}")
    k = np.arange(int(h) + 1)
    terms = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    return float(logsumexp(terms))


def entropy_bound(n, h):
    """h (log(n/h) + 1), the usual upper bound on ``binom_tail``; 0 when h = 0."""
    if h < 0 or h > n:
        raise DomainError(f"need 0 <= h <= n, got h={h}, n={n}")
    if h == 0:
        return 0.0
    return h * (math.log(n / h) + 1.0)
