"""Probability toolkit: samplers and log densities for the distributions the
samplers rely on, the truncated reference prior for the autoregressive
coefficient, and a Gaussian kernel density estimator for figure data.

All sampling goes through :class:`RngStream`, a deterministic stream keyed by
``(seed, stream)``.  Distinct keys give statistically independent streams, so
parallel workers simply use distinct stream ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateSampleError, ParameterDomainError

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_2_OVER_PI = math.log(2.0 / math.pi)


class RngStream:
    """Deterministic random stream keyed by ``(seed, stream)``.

    The same key always reproduces the same draw sequence.  ``child(k)``
    derives an independent stream, which keeps buffered or parallel
    consumption reproducible regardless of interleaving.
    """

    __slots__ = ("seed", "stream", "_path", "_gen")

    def __init__(self, seed: int, stream: int = 0, _path: tuple[int, ...] = ()):
        if seed < 0 or stream < 0:
            raise ParameterDomainError("seed and stream id must be non-negative")
        self.seed = int(seed)
        self.stream = int(stream)
        self._path = tuple(int(k) for k in _path)
        self._gen = np.random.default_rng(
            np.random.SeedSequence([self.seed, self.stream, *self._path])
        )

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator, for batched draws."""
        return self._gen

    def child(self, k: int) -> "RngStream":
        """Independent stream derived from this one's key."""
        return RngStream(self.seed, self.stream, self._path + (int(k),))

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream={self.stream}, path={self._path})"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterDomainError(msg)


@dataclass(frozen=True)
class Normal:
    mean: float
    variance: float

    def __post_init__(self):
        _require(self.variance > 0.0 and math.isfinite(self.variance),
                 "Normal variance must be positive and finite")
        _require(math.isfinite(self.mean), "Normal mean must be finite")


@dataclass(frozen=True)
class Gamma:
    """Shape/rate parameterization; mean = shape / rate."""

    shape: float
    rate: float

    def __post_init__(self):
        _require(self.shape > 0.0, "Gamma shape must be positive")
        _require(self.rate > 0.0, "Gamma rate must be positive")


@dataclass(frozen=True)
class InverseGamma:
    """Shape/scale parameterization; mean = scale / (shape - 1) for shape > 1."""

    shape: float
    scale: float

    def __post_init__(self):
        _require(self.shape > 0.0, "InverseGamma shape must be positive")
        _require(self.scale > 0.0, "InverseGamma scale must be positive")


@dataclass(frozen=True)
class Beta:
    a: float
    b: float

    def __post_init__(self):
        _require(self.a > 0.0, "Beta a must be positive")
        _require(self.b > 0.0, "Beta b must be positive")


@dataclass(frozen=True)
class BetaPrime:
    """If X ~ BetaPrime(a, b) then X / (1 + X) ~ Beta(a, b)."""

    a: float
    b: float

    def __post_init__(self):
        _require(self.a > 0.0, "BetaPrime a must be positive")
        _require(self.b > 0.0, "BetaPrime b must be positive")


DistSpec = Union[Normal, Gamma, InverseGamma, Beta, BetaPrime]


def sample(d: DistSpec, rng: RngStream) -> float:
    """Draw one variate from ``d``."""
    g = rng.generator
    if isinstance(d, Normal):
        return float(g.normal(d.mean, math.sqrt(d.variance)))
    if isinstance(d, Gamma):
        return float(g.standard_gamma(d.shape)) / d.rate
    if isinstance(d, InverseGamma):
        return d.scale / float(g.standard_gamma(d.shape))
    if isinstance(d, Beta):
        return float(g.beta(d.a, d.b))
    if isinstance(d, BetaPrime):
        # Gamma ratio; numerically safer than B / (1 - B) near B = 1.
        num = float(g.standard_gamma(d.a))
        den = float(g.standard_gamma(d.b))
        while den == 0.0:  # pragma: no cover - probability ~ 0
            den = float(g.standard_gamma(d.b))
        return num / den
    raise ParameterDomainError(f"unknown distribution spec: {d!r}")


def sample_many(d: DistSpec, rng: RngStream, size: int) -> np.ndarray:
    """Vectorized version of :func:`sample`."""
    g = rng.generator
    if isinstance(d, Normal):
        return g.normal(d.mean, math.sqrt(d.variance), size)
    if isinstance(d, Gamma):
        return g.standard_gamma(d.shape, size) / d.rate
    if isinstance(d, InverseGamma):
        return d.scale / g.standard_gamma(d.shape, size)
    if isinstance(d, Beta):
        return g.beta(d.a, d.b, size)
    if isinstance(d, BetaPrime):
        num = g.standard_gamma(d.a, size)
        den = g.standard_gamma(d.b, size)
        bad = den == 0.0
        while bad.any():  # pragma: no cover - probability ~ 0
            den[bad] = g.standard_gamma(d.b, int(bad.sum()))
            bad = den == 0.0
        return num / den
    raise ParameterDomainError(f"unknown distribution spec: {d!r}")


def logpdf(d: DistSpec, x: float) -> float:
    """Natural-log density of ``d`` at ``x``; ``-inf`` outside the support."""
    if isinstance(d, Normal):
        z = x - d.mean
        return -0.5 * (_LOG_2PI + math.log(d.variance)) - 0.5 * z * z / d.variance
    if isinstance(d, Gamma):
        if x <= 0.0:
            return -math.inf
        return (d.shape * math.log(d.rate) - math.lgamma(d.shape)
                + (d.shape - 1.0) * math.log(x) - d.rate * x)
    if isinstance(d, InverseGamma):
        if x <= 0.0:
            return -math.inf
        return (d.shape * math.log(d.scale) - math.lgamma(d.shape)
                - (d.shape + 1.0) * math.log(x) - d.scale / x)
    if isinstance(d, Beta):
        if x <= 0.0 or x >= 1.0:
            return -math.inf
        return ((d.a - 1.0) * math.log(x) + (d.b - 1.0) * math.log1p(-x)
                - _log_beta(d.a, d.b))
    if isinstance(d, BetaPrime):
        if x <= 0.0:
            return -math.inf
        return ((d.a - 1.0) * math.log(x) - (d.a + d.b) * math.log1p(x)
                - _log_beta(d.a, d.b))
    raise ParameterDomainError(f"unknown distribution spec: {d!r}")


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def phi_reference_from_uniform(u: float) -> float:
    """Inverse CDF of the truncated reference prior: phi = sin(pi * u / 2)."""
    return math.sin(0.5 * math.pi * u)


def sample_phi_reference(rng: RngStream) -> float:
    """Draw from the reference prior 2 / (pi * sqrt(1 - phi^2)) on [0, 1)."""
    return phi_reference_from_uniform(float(rng.generator.random()))


def logpdf_phi_reference(phi: float) -> float:
    """Log density of the truncated reference prior; ``-inf`` off [0, 1)."""
    if phi < 0.0 or phi >= 1.0:
        return -math.inf
    return _LOG_2_OVER_PI - 0.5 * math.log1p(-phi * phi)


def kde(draws, grid, bandwidth: float | None = None) -> np.ndarray:
    """Gaussian kernel density estimate of ``draws`` evaluated on ``grid``.

    The default bandwidth is the rule of thumb
    ``0.9 * min(sd, IQR / 1.34) * n ** (-1/5)``, with a fallback to the
    standard deviation when the interquartile range collapses.
    """
    x = np.asarray(draws, dtype=float).ravel()
    g = np.asarray(grid, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError("kde needs at least two draws")
    if g.size == 0:
        raise DegenerateSampleError("kde needs a nonempty grid")
    if bandwidth is None:
        sd = float(np.std(x, ddof=1))
        if sd == 0.0:
            raise DegenerateSampleError("kde: all draws are identical")
        q75, q25 = np.quantile(x, [0.75, 0.25])
        spread = min(sd, (q75 - q25) / 1.34)
        if spread <= 0.0:
            spread = sd
        bandwidth = 0.9 * spread * x.size ** (-0.2)
    if bandwidth <= 0.0:
        raise DegenerateSampleError("kde bandwidth must be positive")

    norm = 1.0 / (x.size * bandwidth * math.sqrt(2.0 * math.pi))
    out = np.zeros_like(g)
    # Chunk over draws to bound the (grid x draws) intermediate.
    step = max(1, int(4_000_000 / max(g.size, 1)))
    for lo in range(0, x.size, step):
        z = (g[:, None] - x[None, lo:lo + step]) / bandwidth
        out += np.exp(-0.5 * z * z).sum(axis=1)
    return out * norm
