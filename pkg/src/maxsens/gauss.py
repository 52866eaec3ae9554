"""Gaussian special functions, small-dimension normal orthant probabilities and
reproducible random streams.

`mvn_cdf` evaluates ``P(N(0, cov) <= upper)`` for up to six dimensions:

* p = 1, 2 are closed-form (the bivariate case follows Genz's BVND
  Gauss-Legendre scheme, accurate to ~1e-15);
* p = 3 integrates the bivariate conditional probability over the first
  coordinate by adaptive quadrature;
* 4 <= p <= 6 uses the Genz separation-of-variables transform integrated
  with fixed-seed scrambled Sobol points, doubling the point count until the
  spread over the scrambles is below the target; repeated evaluations are
  therefore deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import asin, exp, pi, sqrt

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .core import DimensionError, NotPositiveDefiniteError

__all__ = [
    "std_normal_pdf",
    "std_normal_cdf",
    "CovMatrix",
    "RngStream",
    "bvn_cdf",
    "mvn_cdf",
    "sample_gaussian_vector",
    "poisson_frechet_arrivals",
    "MAX_MVN_DIM",
]

MAX_MVN_DIM = 6
_INV_SQRT_2PI = 1.0 / sqrt(2.0 * pi)
_TWOPI = 2.0 * pi


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(x):
    """Standard normal distribution function (erfc based, no cancellation in the tails)."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """Symmetric positive definite covariance with its Cholesky factor."""

    entries: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {a.shape}")
        if not np.allclose(a, a.T, rtol=1e-12, atol=0):
            raise NotPositiveDefiniteError("covariance must be symmetric")
        a = 0.5 * (a + a.T)
        try:
            L = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(f"covariance is not positive definite:\n{a}") from None
        a.setflags(write=False)
        L.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "chol", L)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def _as_cov(cov) -> CovMatrix:
    return cov if isinstance(cov, CovMatrix) else CovMatrix(cov)


@dataclass(frozen=True)
class RngStream:
    """Counter-based (Philox) random stream keyed by ``(seed, stream_id, *path)``.

    Equal keys always produce identical sequences; distinct keys give
    independent streams through `numpy.random.SeedSequence` spawn keys.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for v in (self.seed, self.stream_id, *self.path):
            if int(v) != v or not 0 <= v < 2**64:
                raise ValueError(f"stream keys must be 64-bit unsigned integers, got {v}")

    def child(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, (*self.path, int(index)))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *self.path))
        return np.random.Generator(np.random.Philox(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


@lru_cache(maxsize=None)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _bvn_upper(h: float, k: float, r: float) -> float:
    # P(X > h, Y > k), Genz BVND
    if np.isposinf(h) or np.isposinf(k):
        return 0.0
    if np.isneginf(h):
        return 1.0 if np.isneginf(k) else float(ndtr(-k))
    if np.isneginf(k):
        return float(ndtr(-h))
    if r == 0.0:
        return float(ndtr(-h) * ndtr(-k))
    ar = abs(r)
    z, w = _legendre(6 if ar < 0.3 else 12 if ar < 0.75 else 20)
    hk = h * k
    if ar < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = asin(r)
        sn = np.sin(0.5 * asr * (z + 1.0))
        bvn = float(w @ np.exp((sn * hk - hs) / (1.0 - sn * sn)))
        return bvn * asr / (2.0 * _TWOPI) + float(ndtr(-h) * ndtr(-k))
    if r < 0:
        k, hk = -k, -hk
    bvn = 0.0
    if ar < 1.0:
        as_ = (1.0 - r) * (1.0 + r)
        a = sqrt(as_)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        bvn = a * exp(-0.5 * (bs / as_ + hk)) * (
            1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0
        )
        if hk > -160.0:
            b = sqrt(bs)
            bvn -= exp(-0.5 * hk) * sqrt(_TWOPI) * float(ndtr(-b / a)) * b * (
                1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0
            )
        a *= 0.5
        xs = (a * (z + 1.0)) ** 2
        rs = np.sqrt(1.0 - xs)
        with np.errstate(divide="ignore", over="ignore"):
            terms = np.exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs - np.exp(
                -0.5 * (bs / xs + hk)
            ) * (1.0 + c * xs * (1.0 + d * xs))
        bvn = -(bvn + a * float(w @ terms)) / _TWOPI
    if r > 0:
        bvn += float(ndtr(-max(h, k)))
    else:
        bvn = -bvn + max(0.0, float(ndtr(-h) - ndtr(-k)))
    return bvn


def bvn_cdf(h: float, k: float, r: float) -> float:
    """``P(X <= h, Y <= k)`` for standard normals with correlation ``r``."""
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {r}")
    return min(1.0, max(0.0, _bvn_upper(-float(h), -float(k), float(r))))


def _tvn_cdf(u: np.ndarray, a: np.ndarray) -> float:
    s1 = sqrt(a[0, 0])
    cross = a[1:, 0] / a[0, 0]
    cond = a[1:, 1:] - np.outer(a[1:, 0], a[0, 1:]) / a[0, 0]
    sd = np.sqrt(np.diag(cond))
    rho = cond[0, 1] / (sd[0] * sd[1])

    def integrand(z):
        x1 = s1 * z
        m = u[1:] - cross * x1
        return exp(-0.5 * z * z) * _INV_SQRT_2PI * bvn_cdf(m[0] / sd[0], m[1] / sd[1], rho)

    top = u[0] / s1
    if top <= -10.0:
        return 0.0
    val, _ = quad(integrand, -10.0, min(top, 10.0), epsabs=1e-15, epsrel=1e-12, limit=200)
    return min(1.0, max(0.0, val))


_QMC_REPS = 8
_QMC_MIN_LOG2 = 12
_QMC_MAX_LOG2 = 18
_QMC_RTOL = 2e-6


@lru_cache(maxsize=64)
def _sobol(dim: int, log2n: int, rep: int) -> np.ndarray:
    pts = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng((dim, rep))).random_base2(log2n)
    pts.setflags(write=False)
    return pts


def _sov_mean(w: np.ndarray, u: np.ndarray, L: np.ndarray) -> float:
    p = u.size
    e = np.full(len(w), ndtr(u[0] / L[0, 0]))
    f = e.copy()
    y = np.zeros((len(w), p))
    for i in range(1, p):
        y[:, i - 1] = ndtri(np.clip(w[:, i - 1] * e, 1e-300, 1.0 - 1e-16))
        e = ndtr((u[i] - y[:, :i] @ L[i, :i]) / L[i, i])
        f = f * e
    return float(f.mean())


def _sov_cdf(u: np.ndarray, a: np.ndarray) -> float:
    # Genz ordering heuristic: tightest limits first
    order = np.argsort(u / np.sqrt(np.diag(a)))
    u = u[order]
    L = np.linalg.cholesky(a[np.ix_(order, order)])
    for log2n in range(_QMC_MIN_LOG2, _QMC_MAX_LOG2 + 1):
        est = np.array([_sov_mean(_sobol(u.size - 1, log2n, r), u, L) for r in range(_QMC_REPS)])
        value = est.mean()
        if 3.0 * est.std(ddof=1) / sqrt(_QMC_REPS) <= _QMC_RTOL * value:
            break
    return float(min(1.0, max(0.0, value)))


def mvn_cdf(upper, cov) -> float:
    """``P(N(0, cov) <= upper)`` componentwise, for dimension at most six."""
    cov = _as_cov(cov)
    u = np.atleast_1d(np.asarray(upper, dtype=float))
    if u.size != cov.dim:
        raise DimensionError(f"upper has {u.size} entries for a {cov.dim}-dimensional covariance")
    if cov.dim > MAX_MVN_DIM:
        raise DimensionError(f"mvn_cdf supports dimension <= {MAX_MVN_DIM}, got {cov.dim}")
    if np.any(np.isnan(u)):
        raise ValueError("upper limits must not be NaN")
    if np.any(np.isneginf(u)):
        return 0.0
    keep = ~np.isposinf(u)
    if not keep.any():
        return 1.0
    a = cov.entries[np.ix_(keep, keep)]
    u = u[keep]
    p = u.size
    if p == 1:
        return float(ndtr(u[0] / sqrt(a[0, 0])))
    if p == 2:
        sd = np.sqrt(np.diag(a))
        return bvn_cdf(u[0] / sd[0], u[1] / sd[1], a[0, 1] / (sd[0] * sd[1]))
    if p == 3:
        return _tvn_cdf(u, a)
    return _sov_cdf(u, a)


def sample_gaussian_vector(cov, rng, size: int | None = None) -> np.ndarray:
    """Centred Gaussian draw(s) with covariance ``cov``.

    Returns a vector of length p, or an array of shape ``(size, p)``.
    """
    cov = _as_cov(cov)
    gen = _as_generator(rng)
    z = gen.standard_normal((1 if size is None else size, cov.dim))
    out = z @ cov.chol.T
    return out[0] if size is None else out


def poisson_frechet_arrivals(rng, mass: float = 1.0):
    """Lazily yield the decreasing points ``mass / Gamma_i`` of a Poisson process
    with intensity ``mass * u**-2 du`` on (0, inf)."""
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    gen = _as_generator(rng)
    total = 0.0
    while True:
        total += gen.standard_exponential()
        yield mass / total
