"""Shared test oracles."""

import numpy as np
from scipy.integrate import quad

from nifbm.covariance import fbm_cov


def quad_oracle(H: float, h: float, t: float, s: float) -> float:
    """Window-average covariance by nested adaptive quadrature of the
    underlying process covariance over [t, t+h] x [s, s+h].

    Independent of the closed form under test; the inner integral flags
    the |u - v| kink location so the adaptive rule subdivides there.
    """

    def inner(v):
        pts = [v] if t < v < t + h else None
        val, _ = quad(
            lambda u: fbm_cov(H, u, v),
            t,
            t + h,
            points=pts,
            epsabs=1e-10,
            epsrel=1e-10,
            limit=200,
        )
        return val

    val, _ = quad(inner, s, s + h, epsabs=1e-9, epsrel=1e-9, limit=200)
    return val / h**2


def sample_autocov(samples: np.ndarray, lag: int) -> float:
    """Cross-replication sample autocovariance at the given lag;
    samples has one replication per row."""
    return float(np.mean(samples[:, 0] * samples[:, lag]))
