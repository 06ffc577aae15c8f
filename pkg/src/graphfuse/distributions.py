"""Variate generators, Student-t quantiles and default prior constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq
from scipy.special import betainc

# Sentinel for "pick the fused-lasso penalty by cross-validation".
CROSS_VALIDATE = "cv"


def student_t_sf(q: float, nu: float) -> float:
    """Upper tail P(T > q) for q >= 0 via the regularized incomplete beta."""
    x = nu / (nu + q * q)
    return 0.5 * float(betainc(0.5 * nu, 0.5, x))


def student_t_cdf(q: float, nu: float) -> float:
    if nu <= 0:
        raise ValueError("degrees of freedom must be positive")
    tail = student_t_sf(abs(q), nu)
    return 1.0 - tail if q > 0 else tail


def student_t_quantile(p: float, nu: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    if nu <= 0:
        raise ValueError("degrees of freedom must be positive")
    if p == 0.5:
        return 0.0
    upper = min(p, 1.0 - p)  # target tail mass, solved on the positive half-line
    hi = 1.0
    while student_t_sf(hi, nu) > upper:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("quantile out of floating-point range")
    q = brentq(lambda x: student_t_sf(x, nu) - upper, 0.0, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    return q if p > 0.5 else -q


@dataclass(frozen=True)
class Hyperparams:
    """Prior constants shared by the samplers and the sparsification rule.

    ``tv_lambda`` is either a nonnegative penalty or ``CROSS_VALIDATE``.
    """

    a_t: float
    b_t: float
    a_sigma: float = 0.5
    b_sigma: float = 0.5
    lambda0: float = 5.0
    laplace_rate: float = 1.0
    tv_lambda: float | str = CROSS_VALIDATE

    def __post_init__(self):
        for name in ("a_t", "b_t", "a_sigma", "b_sigma", "lambda0", "laplace_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if self.tv_lambda != CROSS_VALIDATE:
            if not (isinstance(self.tv_lambda, (int, float)) and self.tv_lambda >= 0):
                raise ValueError("tv_lambda must be >= 0 or 'cv'")

    @property
    def nu(self) -> float:
        return 2.0 * self.a_t

    @property
    def m(self) -> float:
        return math.sqrt(self.b_t / self.a_t)

    def updated(self, **changes) -> "Hyperparams":
        """Copy with overrides; ``m=`` is accepted and converted to ``b_t``."""
        changes = {k: v for k, v in changes.items() if v is not None}
        if "m" in changes:
            m = changes.pop("m")
            a_t = changes.get("a_t", self.a_t)
            changes["b_t"] = a_t * m * m
        return replace(self, **changes)


def t_scale_for(n: int, nu: float) -> float:
    """Scale m with P(|t_nu(m)| >= sqrt(log n / n)) = 1/n."""
    return math.sqrt(math.log(n) / n) / student_t_quantile(1.0 - 1.0 / (2.0 * n), nu)


def default_hyperparams(n: int) -> Hyperparams:
    if n < 2:
        raise ValueError("default hyperparameters need n >= 2")
    a_t = 2.0
    m = t_scale_for(n, 2.0 * a_t)
    return Hyperparams(
        a_t=a_t,
        b_t=a_t * m * m,
        a_sigma=0.5,
        b_sigma=0.5,
        lambda0=5.0,
        laplace_rate=math.sqrt(2.0 * math.log(n)),
    )


# -- variate generators -------------------------------------------------------

def _check_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{name} must be finite and > 0")
    return arr


def sample_normal(mean, variance, rng: np.random.Generator, size=None):
    variance = _check_positive("variance", variance)
    return rng.normal(mean, np.sqrt(variance), size=size)


def sample_inverse_gamma(shape, rate, rng: np.random.Generator, size=None):
    """Draws with density proportional to x**(-shape - 1) * exp(-rate / x)."""
    shape = _check_positive("shape", shape)
    rate = _check_positive("rate", rate)
    return rate / rng.standard_gamma(shape, size=size)


def sample_inverse_gaussian(mean, shape, rng: np.random.Generator, size=None):
    """Inverse-Gaussian draws by the transformation-with-rejection method.

    The smaller root is evaluated as ``mean / (1 + w + sqrt(w * (w + 2)))``,
    which stays accurate for very large ``mean`` where the textbook form
    cancels catastrophically.
    """
    mean = _check_positive("mean", mean)
    shape = _check_positive("shape", shape)
    if size is None:
        size = np.broadcast(mean, shape).shape
    z = rng.standard_normal(size)
    u = rng.random(size)
    w = mean * z * z / (2.0 * shape)
    x = mean / (1.0 + w + np.sqrt(w * (w + 2.0)))
    out = np.where(u * (mean + x) <= mean, x, mean * mean / x)
    return out if out.ndim else float(out)
