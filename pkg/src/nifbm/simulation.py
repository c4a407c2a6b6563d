"""Exact Gaussian sampling of increment series via dense Cholesky.

The increment series of the window-averaged process is stationary, so
its covariance matrix is Toeplitz and fully described by the
autocovariance sequence.  Sampling multiplies a Cholesky factor of that
matrix into i.i.d. standard normals.  Dense factorization keeps the
sampler exact; the supported envelope is N <= 2**13 per factorization.
A circulant-embedding sampler is provided separately for the very long
single-path runs where a dense factor would not fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import toeplitz

from .covariance import (
    AutocovSequence,
    MixedParams,
    Params,
    autocov_sequence,
    gamma,
)
from .errors import GridMismatchError, LengthError, NotPositiveDefiniteError

__all__ = [
    "RngSeed",
    "SampleGrid",
    "IncrementSeries",
    "DriftSpec",
    "cholesky_factor",
    "sample_increments",
    "sample_increments_circulant",
    "sample_mixed_components",
    "combine_mixed_components",
    "aggregate_increments",
    "add_drift",
]

MAX_DENSE_N = 2**13


@dataclass(frozen=True)
class RngSeed:
    """Seed plus replication stream index; the pair fixes the noise."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream < 0:
            raise ValueError("seed and stream must be nonnegative integers")

    def generator(self) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.stream])


@dataclass(frozen=True)
class SampleGrid:
    """Observation grid: N increments of width j*h, times t_k = k*j*h."""

    h: float
    N: int
    j: int = 1

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError("step h must be positive")
        if self.N < 1:
            raise ValueError("need at least one increment")
        if self.j not in (1, 2, 4, 8):
            raise ValueError("aggregation factor j must be one of 1, 2, 4, 8")


@dataclass(frozen=True)
class IncrementSeries:
    """Equally spaced increments on a grid."""

    grid: SampleGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size != self.grid.N:
            raise ValueError("values length must equal grid.N")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DriftSpec:
    """Drift coefficient mu and the drift function G sampled at the
    observation times t_0, ..., t_N (one more point than increments)."""

    mu: float
    g_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.g_values, dtype=float)
        if g.ndim != 1 or g.size < 2:
            raise ValueError("need G at two or more grid times")
        if g[0] != 0.0:
            raise ValueError("drift function must satisfy G(0) = 0")
        if not np.any(g != 0.0):
            raise ValueError("drift function must not vanish identically")
        object.__setattr__(self, "g_values", g)


def cholesky_factor(cov: Union[AutocovSequence, np.ndarray]) -> np.ndarray:
    """Lower-triangular Cholesky factor of the Toeplitz matrix whose
    first row is the given autocovariance sequence."""
    row = cov.values if isinstance(cov, AutocovSequence) else np.asarray(cov, float)
    try:
        return np.linalg.cholesky(toeplitz(row))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            "Toeplitz covariance is not positive definite"
        ) from exc


def sample_increments(
    params: Params,
    grid: SampleGrid,
    seed: RngSeed,
    factor: np.ndarray = None,
) -> IncrementSeries:
    """Draw one exact zero-mean Gaussian increment series.

    Pass a precomputed Cholesky factor to amortize the factorization
    across replications; it must match (params, grid).
    """
    if factor is None:
        factor = cholesky_factor(autocov_sequence(params, grid.h, grid.j, grid.N))
    z = seed.generator().standard_normal(grid.N)
    return IncrementSeries(grid=grid, values=factor @ z)


def sample_mixed_components(
    params: MixedParams, h: float, N: int, seed: RngSeed, factors=None
) -> tuple:
    """Unit-scale component noises (e1, e2) for the two-process model.

    The component increments at width j*h have covariance
    a2*(jh)^(2H)*gamma(H, n), so a single pair of unit-gamma draws can
    be rescaled to every aggregation factor j while keeping the noise
    shared across factors.  Returns two length-N vectors with Toeplitz
    covariance gamma(H1, .) and gamma(H2, .).
    """
    if factors is None:
        factors = mixed_component_factors(params, N)
    l1, l2 = factors
    rng = seed.generator()
    z1 = rng.standard_normal(N)
    z2 = rng.standard_normal(N)
    return l1 @ z1, l2 @ z2


def mixed_component_factors(params: MixedParams, N: int) -> tuple:
    """Cholesky factors of the unit-scale component covariances."""
    lags = np.arange(N)
    l1 = cholesky_factor(gamma(params.H1, lags))
    l2 = cholesky_factor(gamma(params.H2, lags))
    return l1, l2


def combine_mixed_components(
    params: MixedParams, h: float, j: int, e1: np.ndarray, e2: np.ndarray
) -> IncrementSeries:
    """Increment series at aggregation j from shared component noises."""
    w = j * h
    values = (
        math.sqrt(params.a2) * w**params.H1 * e1
        + math.sqrt(params.b2) * w**params.H2 * e2
    )
    return IncrementSeries(grid=SampleGrid(h=h, N=values.size, j=j), values=values)


def sample_increments_circulant(
    params: Params, grid: SampleGrid, seed: RngSeed
) -> IncrementSeries:
    """Draw an increment series by circulant embedding (FFT based).

    Exact when the embedding is nonnegative definite, which holds for
    this covariance family at all tested Hurst indices.  Intended for
    single very long paths where a dense factor is impractical.
    """
    row = autocov_sequence(params, grid.h, grid.j, grid.N).values
    circ = np.concatenate([row, row[-2:0:-1]])
    eig = np.fft.rfft(circ).real
    tol = 1e-8 * eig.max()
    if eig.min() < -tol:
        raise NotPositiveDefiniteError("circulant embedding has negative eigenvalues")
    eig = np.clip(eig, 0.0, None)
    m = circ.size
    rng = seed.generator()
    z = rng.standard_normal(m // 2 + 1) + 1j * rng.standard_normal(m // 2 + 1)
    z[0] = z[0].real * math.sqrt(2.0)
    if m % 2 == 0:
        z[-1] = z[-1].real * math.sqrt(2.0)
    spectral = z * np.sqrt(eig * m / 2.0)
    values = np.fft.irfft(spectral, n=m)[: grid.N]
    return IncrementSeries(grid=grid, values=values)


def aggregate_increments(base: IncrementSeries, j: int) -> IncrementSeries:
    """Increments at width j times the base width, from base increments.

    One doubling step maps x to y with y_k = (x_{2k+2} + 2 x_{2k+1} +
    x_{2k}) / 2, shrinking the length from M to (M - 1) // 2; the step
    is applied log2(j) times.
    """
    if j not in (2, 4, 8):
        raise ValueError("target aggregation factor must be 2, 4 or 8")
    if base.grid.j * j > 8:
        raise ValueError("aggregation beyond factor 8 is unsupported")
    values = base.values
    levels = int(round(math.log2(j)))
    for _ in range(levels):
        n_out = (values.size - 1) // 2
        if n_out < 1:
            raise LengthError(
                f"series of length {base.grid.N} too short to aggregate by {j}"
            )
        values = 0.5 * (values[2 : 2 * n_out + 1 : 2]
                        + 2.0 * values[1 : 2 * n_out : 2]
                        + values[0 : 2 * n_out - 1 : 2])
    grid = SampleGrid(h=base.grid.h, N=values.size, j=base.grid.j * j)
    return IncrementSeries(grid=grid, values=values)


def add_drift(increments: IncrementSeries, drift: DriftSpec) -> IncrementSeries:
    """Add mu * (G(t_{k+1}) - G(t_k)) to each increment."""
    if drift.g_values.size != increments.grid.N + 1:
        raise GridMismatchError(
            f"drift sampled at {drift.g_values.size} points, "
            f"expected {increments.grid.N + 1}"
        )
    values = increments.values + drift.mu * np.diff(drift.g_values)
    return IncrementSeries(grid=increments.grid, values=values)
