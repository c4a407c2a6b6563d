"""Closed-form covariances of window-averaged fractional Brownian motion.

The central object is the normalized moving average

    X_t = (1/h) * integral of W_u over [t, t+h],

where W is fractional Brownian motion with Hurst index H.  This module
evaluates the covariance function of X, the autocovariance of its
equally spaced increments (through the kernel ``gamma``), and the mixed
autocovariance for a sum of two independent such processes.  Everything
here is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import bisect
from scipy.special import binom

__all__ = [
    "HurstIndex",
    "NifbmParams",
    "MixedParams",
    "AutocovSequence",
    "fbm_cov",
    "fbm_increment_cov",
    "nifbm_cov",
    "nifbm_var",
    "gamma",
    "gamma_asymptotic",
    "increment_autocov",
    "mixed_increment_autocov",
    "autocov_sequence",
    "find_h0",
]

# Above this lag the direct fourth-difference formula for gamma loses
# roughly 4*log10(n) digits to cancellation, so we switch to a series
# expansion in 1/n that is exact to machine precision there.
_DIRECT_LIMIT = 1000


def _check_hurst(value: float) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"Hurst index must lie strictly in (0, 1), got {value}")
    return value


class HurstIndex(float):
    """A float constrained to the open interval (0, 1)."""

    def __new__(cls, value):
        return super().__new__(cls, _check_hurst(value))


@dataclass(frozen=True)
class NifbmParams:
    """Parameters of a single scaled process: Hurst index H, window
    width h and squared scale a2 (the model is sqrt(a2) * X)."""

    H: float
    h: float
    a2: float = 1.0

    def __post_init__(self):
        _check_hurst(self.H)
        if self.h <= 0.0:
            raise ValueError("window width h must be positive")
        if self.a2 <= 0.0:
            raise ValueError("scale a2 must be positive")


@dataclass(frozen=True)
class MixedParams:
    """Parameters of a sum of two independent scaled processes.

    Canonical ordering H1 > H2 is enforced; estimators report the larger
    Hurst index first as well.
    """

    H1: float
    H2: float
    a2: float
    b2: float

    def __post_init__(self):
        _check_hurst(self.H1)
        _check_hurst(self.H2)
        if not self.H1 > self.H2:
            raise ValueError("canonical ordering requires H1 > H2")
        if self.a2 <= 0.0 or self.b2 <= 0.0:
            raise ValueError("scales a2 and b2 must be positive")


Params = Union[NifbmParams, MixedParams]


@dataclass(frozen=True)
class AutocovSequence:
    """First row of the (Toeplitz) covariance matrix of an increment
    series, values[n] being the autocovariance at lag n."""

    params: Params
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("autocovariance sequence must be a nonempty vector")
        if values[0] <= 0.0:
            raise ValueError("lag-0 autocovariance (a variance) must be positive")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def fbm_cov(H: float, s: float, t: float) -> float:
    """Covariance of fractional Brownian motion at times s and t."""
    H = _check_hurst(H)
    if s < 0.0 or t < 0.0:
        raise ValueError("times must be nonnegative")
    p = 2.0 * H
    return 0.5 * (s**p + t**p - abs(s - t) ** p)


def fbm_increment_cov(H: float, s: float, t: float, u: float, v: float) -> float:
    """Covariance of the fBm increments over [s, t] and [u, v].

    Each interval must be ordered (s <= t, u <= v, nonnegative); the
    intervals themselves may coincide or overlap.
    """
    H = _check_hurst(H)
    if not (0.0 <= s <= t) or not (0.0 <= u <= v):
        raise ValueError("arguments must satisfy 0 <= s <= t and 0 <= u <= v")
    p = 2.0 * H
    return 0.5 * (
        abs(v - s) ** p + abs(u - t) ** p - abs(v - t) ** p - abs(u - s) ** p
    )


def nifbm_cov(H: float, h: float, t: float, s: float) -> float:
    """Covariance E[X_t X_s] of the window average, symmetric in (t, s).

    The expression splits into a part depending on the endpoints alone
    and a stationary part depending only on s - t.
    """
    H = _check_hurst(H)
    if h <= 0.0:
        raise ValueError("window width h must be positive")
    if t < 0.0 or s < 0.0:
        raise ValueError("the process starts at time zero")
    if s < t:
        t, s = s, t
    p1 = 2.0 * H + 1.0
    p2 = 2.0 * H + 2.0
    d = s - t
    first = ((s + h) ** p1 - s**p1 + (t + h) ** p1 - t**p1) / (2.0 * h * p1)
    second = (2.0 * d**p2 - (d + h) ** p2 - abs(d - h) ** p2) / (
        2.0 * h * h * p1 * p2
    )
    return first + second


def nifbm_var(H: float, h: float, t: float) -> float:
    """Variance E[X_t^2] of the window average at time t >= 0."""
    H = _check_hurst(H)
    if h <= 0.0:
        raise ValueError("window width h must be positive")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    p1 = 2.0 * H + 1.0
    p2 = 2.0 * H + 2.0
    return ((t + h) ** p1 - t**p1) / (h * p1) - h ** (2.0 * H) / (p1 * p2)


def _gamma_direct(p: float, n: np.ndarray) -> np.ndarray:
    return (
        np.abs(n - 2.0) ** p
        - 4.0 * np.abs(n - 1.0) ** p
        + 6.0 * n**p
        - 4.0 * (n + 1.0) ** p
        + (n + 2.0) ** p
    )


def _gamma_series(p: float, n: np.ndarray) -> np.ndarray:
    # Fourth central difference of x^p at x = n, expanded in powers of
    # 1/n.  The odd and the k <= 2 even terms cancel exactly; the
    # remaining terms decay by n^-2 each, so a handful suffice for
    # n > _DIRECT_LIMIT.
    total = np.zeros_like(n)
    for k in range(4, 18, 2):
        coef = (2.0 ** (k + 1) - 8.0) * binom(p, k)
        if coef == 0.0:
            continue
        total += coef * n ** (p - k)
    return total


def gamma(H: float, n) -> Union[float, np.ndarray]:
    """Autocovariance kernel of the unit-width increment series at lag n.

    Symmetric in n; accepts scalars or arrays.  The direct formula is a
    fourth central difference of |n|^(2H+2) and is used for small lags;
    large lags use a series expansion that avoids catastrophic
    cancellation.
    """
    H = _check_hurst(H)
    arr = np.abs(np.asarray(n, dtype=float))
    p = 2.0 * H + 2.0
    norm = 4.0 * (2.0 * H + 1.0) * (H + 1.0)
    out = np.empty_like(arr)
    small = arr <= _DIRECT_LIMIT
    if small.any():
        out[small] = _gamma_direct(p, arr[small])
    if (~small).any():
        out[~small] = _gamma_series(p, arr[~small])
    out /= norm
    if np.isscalar(n) or np.ndim(n) == 0:
        return float(out)
    return out


def gamma_asymptotic(H: float, n) -> Union[float, np.ndarray]:
    """Leading large-n behavior of gamma: H(2H-1) * n^(2H-2).

    Zero at H = 1/2 and negative for H < 1/2, matching the sign of
    gamma itself.  Used as tail bound when truncating series in gamma.
    """
    H = _check_hurst(H)
    arr = np.asarray(n, dtype=float)
    out = H * (2.0 * H - 1.0) * arr ** (2.0 * H - 2.0)
    if np.isscalar(n) or np.ndim(n) == 0:
        return float(out)
    return out


def increment_autocov(params: NifbmParams, n) -> Union[float, np.ndarray]:
    """Autocovariance h^(2H) * gamma(H, n) of the width-h increments.

    The a2 factor is deliberately not applied; callers scale."""
    return params.h ** (2.0 * params.H) * gamma(params.H, n)


def mixed_increment_autocov(
    params: MixedParams, h: float, j: int, n
) -> Union[float, np.ndarray]:
    """Autocovariance at lag n of the width-j*h increments of the
    two-component model, a2*(jh)^(2H1)*gamma(H1,n) + b2*(...H2...)."""
    if j not in (1, 2, 4, 8):
        raise ValueError("aggregation factor j must be one of 1, 2, 4, 8")
    if h <= 0.0:
        raise ValueError("window width h must be positive")
    w = j * h
    return params.a2 * w ** (2.0 * params.H1) * gamma(params.H1, n) + params.b2 * w ** (
        2.0 * params.H2
    ) * gamma(params.H2, n)


def autocov_sequence(params: Params, h: float, j: int, N: int) -> AutocovSequence:
    """First N autocovariances of the width-j*h increment series.

    For one-process params the values are a2*(jh)^(2H)*gamma(H, n); for
    mixed params they are mixed_increment_autocov.  The result is the
    first row of a symmetric positive-definite Toeplitz matrix.
    """
    if N < 1:
        raise ValueError("need at least one lag")
    lags = np.arange(N)
    if isinstance(params, MixedParams):
        values = mixed_increment_autocov(params, h, j, lags)
    else:
        if j not in (1, 2, 4, 8):
            raise ValueError("aggregation factor j must be one of 1, 2, 4, 8")
        w = j * h
        values = params.a2 * w ** (2.0 * params.H) * gamma(params.H, lags)
    return AutocovSequence(params=params, values=values)


def find_h0(tol: float = 1e-9) -> float:
    """Root of gamma(H, 1) = 0 in (0, 1), located by bisection.

    Below this Hurst value consecutive increments are negatively
    correlated, above it positively (unlike plain fBm, where the switch
    happens at 1/2).
    """
    return float(bisect(lambda H: gamma(H, 1), 0.1, 0.5, xtol=tol))
