"""Domain types, marginal transforms and the powered-cost correlation performance.

The simple max-stable fields handled here have standard Fréchet margins,
``P(Y <= y) = exp(-1/y)``.  A GEV variable with location ``eta``, scale ``tau``
and nonzero shape ``xi`` is recovered as

    x(y) = (eta - tau/xi) + tau * y**xi / xi

and the performance studied throughout the package is the standardised
product of powered costs whose expectation is ``Corr(X1**beta1, X2**beta2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, sqrt

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

__all__ = [
    "ParameterError",
    "DimensionError",
    "SmoothnessError",
    "RangeError",
    "ScaleError",
    "ShapeError",
    "ExponentError",
    "NotPositiveDefiniteError",
    "Site",
    "BrParams",
    "SmithParams",
    "Margins",
    "SensitivityEstimate",
    "SigmaGradient",
    "as_coords",
    "semivariogram",
    "smith_variogram",
    "frechet_to_gev",
    "moment_c",
    "moment_d",
    "h_performance",
    "h_gradient",
]


class ParameterError(ValueError):
    """Base class for rejected model parameters."""


class DimensionError(ParameterError):
    """Sites or matrices with incompatible dimensions."""


class SmoothnessError(ParameterError):
    """Variogram smoothness outside (0, 2)."""


class RangeError(ParameterError):
    """Non-positive variogram range."""


class ScaleError(ParameterError):
    """Non-positive GEV scale."""


class ShapeError(ParameterError):
    """Zero GEV shape (the Gumbel branch is not supported)."""


class ExponentError(ParameterError):
    """Damage exponent not a positive integer, or beta*xi >= 1/2."""


class NotPositiveDefiniteError(ParameterError):
    """Covariance matrix that is not symmetric positive definite."""


@dataclass(frozen=True)
class Site:
    """A point of R^d."""

    coords: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in np.atleast_1d(np.asarray(self.coords, dtype=float)))
        if len(c) < 1:
            raise DimensionError("a site needs at least one coordinate")
        if not all(np.isfinite(c)):
            raise ParameterError(f"site coordinates must be finite, got {c}")
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


def as_coords(site) -> np.ndarray:
    """Return the coordinates of a `Site` or array-like as a float vector."""
    if isinstance(site, Site):
        return np.asarray(site.coords, dtype=float)
    return np.asarray(Site(site).coords, dtype=float)


def _lag(a, b) -> np.ndarray:
    a, b = as_coords(a), as_coords(b)
    if a.shape != b.shape:
        raise DimensionError(f"sites of dimension {a.size} and {b.size}")
    return b - a


@dataclass(frozen=True)
class BrParams:
    """Power-variogram parameters of a Brown-Resnick field.

    ``gamma(h) = (|h| / kappa) ** psi`` with range ``kappa > 0`` and
    smoothness ``0 < psi < 2`` (``psi = 2`` is the Smith boundary case and
    is rejected since the multivariate density is then unavailable).
    """

    kappa: float
    psi: float

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise RangeError(f"kappa must be positive, got {self.kappa}")
        if not (0.0 < self.psi < 2.0):
            raise SmoothnessError(f"psi must lie in (0, 2), got {self.psi}")
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "psi", float(self.psi))


@dataclass(frozen=True, eq=False)
class SmithParams:
    """Covariance matrix of the Gaussian storm profile of a Smith field."""

    sigma: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)
    inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = np.array(self.sigma, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
            raise DimensionError(f"sigma must be a square matrix, got shape {s.shape}")
        if not np.all(np.isfinite(s)) or not np.allclose(s, s.T, rtol=0, atol=1e-14 * np.abs(s).max()):
            raise NotPositiveDefiniteError("sigma must be a finite symmetric matrix")
        s = 0.5 * (s + s.T)
        try:
            L = np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(f"sigma is not positive definite:\n{s}") from None
        inv = np.linalg.inv(s)
        s.setflags(write=False)
        L.setflags(write=False)
        inv = 0.5 * (inv + inv.T)  # exact symmetry keeps sigma_12 and sigma_21 results identical
        inv.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "chol", L)
        object.__setattr__(self, "inv", inv)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    def __eq__(self, other):
        return isinstance(other, SmithParams) and np.array_equal(self.sigma, other.sigma)

    def __hash__(self):
        return hash(self.sigma.tobytes())


@dataclass(frozen=True)
class Margins:
    """GEV margin (location, scale, shape) of a site with its damage exponent."""

    eta: float
    tau: float
    xi: float
    beta: int

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ScaleError(f"tau must be positive, got {self.tau}")
        if self.xi == 0 or not np.isfinite(self.xi):
            raise ShapeError("xi must be finite and nonzero")
        if int(self.beta) != self.beta or self.beta < 1:
            raise ExponentError(f"beta must be a positive integer, got {self.beta}")
        if self.beta * self.xi >= 0.5:
            raise ExponentError(
                f"beta*xi = {self.beta * self.xi} >= 1/2: the correlation does not exist"
            )
        object.__setattr__(self, "beta", int(self.beta))

    @property
    def lower(self) -> float:
        """``eta - tau/xi``, the endpoint of the GEV support."""
        return self.eta - self.tau / self.xi

    @property
    def ratio(self) -> float:
        return self.tau / self.xi


@dataclass(frozen=True)
class SensitivityEstimate:
    """Monte Carlo estimate with the standard error of its per-draw summands."""

    value: float
    std_error: float
    n_sims: int
    seed: int
    stream_id: int = 0

    @classmethod
    def from_samples(cls, samples: np.ndarray, seed: int, stream_id: int = 0):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        se = float(samples.std(ddof=1) / sqrt(n)) if n > 1 else 0.0
        return cls(float(samples.mean()), se, n, int(seed), int(stream_id))


@dataclass(frozen=True, eq=False)
class SigmaGradient:
    """Matrix of partial derivatives with respect to the entries of Sigma.

    Entries are unconstrained partials, so the (1, 2) and (2, 1) entries are
    equal and each describes a perturbation of that single entry.  Monte Carlo
    results also carry entrywise standard errors.
    """

    d_sigma: np.ndarray
    std_error: np.ndarray | None = None
    n_sims: int | None = None
    seed: int | None = None
    stream_id: int = 0

    def __getitem__(self, ij) -> SensitivityEstimate | float:
        i, j = ij
        if self.std_error is None:
            return float(self.d_sigma[i, j])
        return SensitivityEstimate(
            float(self.d_sigma[i, j]), float(self.std_error[i, j]),
            int(self.n_sims), int(self.seed), self.stream_id,
        )


def semivariogram(params: BrParams, a, b) -> float:
    """Power semivariogram ``(|a - b| / kappa) ** psi``."""
    dist = float(np.linalg.norm(_lag(a, b)))
    if dist == 0.0:
        return 0.0
    return (dist / params.kappa) ** params.psi


def smith_variogram(params: SmithParams, a, b) -> float:
    """``(a-b)' Sigma^{-1} (a-b) / 2``, the variogram of the Smith field."""
    lag = _lag(a, b)
    if lag.size != params.dim:
        raise DimensionError(f"sites of dimension {lag.size} for a {params.dim}x{params.dim} sigma")
    return 0.5 * float(lag @ params.inv @ lag)


def frechet_to_gev(y, m: Margins):
    """Map standard Fréchet values to the GEV margin ``m``.

    Evaluated as ``eta + tau * expm1(xi log y) / xi``, which equals
    ``(eta - tau/xi) + tau y**xi / xi`` without cancellation for small ``xi``.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("Fréchet values must be positive")
    out = m.eta + m.tau * np.expm1(m.xi * np.log(y)) / m.xi
    return float(out) if out.ndim == 0 else out


def _ipow(x, n: int):
    # repeated multiplication keeps negative bases well defined
    out = np.ones_like(x) if isinstance(x, np.ndarray) else 1.0
    for _ in range(n):
        out = out * x
    return out


# closed forms are trusted while they lose fewer than about 8 digits
_COND_MAX = 1e8


def _expect(fn, m: Margins) -> float:
    # E[fn(X)] with 1/Y = exp(v) unit exponential, integrated over v
    def integrand(v):
        x = m.eta + m.tau * np.expm1(-m.xi * v) / m.xi
        return fn(x) * np.exp(v - np.exp(v))

    # the weight is below 1e-280 outside [-200, 7] and beta*xi < 1/2 tames x there
    return sum(
        quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)[0]
        for lo, hi in ((-200.0, -3.0), (-3.0, 0.0), (0.0, 1.5), (1.5, 7.0))
    )


def moment_c(m: Margins) -> float:
    """``E[X**beta]`` for ``X`` with GEV margin ``m``.

    The binomial expansion in ``Gamma(1 - k xi)`` is used unless it is
    ill-conditioned (``xi`` near zero with a large location), in which case
    the expectation is integrated directly.
    """
    b, xi = m.beta, m.xi
    terms = [
        comb(b, k) * _ipow(m.lower, k) * _ipow(m.ratio, b - k) * gamma(1 - (b - k) * xi)
        for k in range(b + 1)
    ]
    total = float(sum(terms))
    if sum(abs(t) for t in terms) <= _COND_MAX * abs(total):
        return total
    return float(_expect(lambda x: _ipow(x, b), m))


def moment_d(m: Margins) -> float:
    """``Var[X**beta]`` for ``X`` with GEV margin ``m``.

    Double binomial sum with a direct-integration fallback, as in `moment_c`.
    """
    b, xi = m.beta, m.xi
    g1 = [gamma(1 - (b - k) * xi) for k in range(b + 1)]
    total = 0.0
    scale = 0.0
    for k1 in range(b + 1):
        for k2 in range(b + 1):
            coef = (
                comb(b, k1)
                * comb(b, k2)
                * _ipow(m.lower, k1 + k2)
                * _ipow(m.ratio, 2 * b - k1 - k2)
            )
            t1 = coef * gamma(1 - xi * (2 * b - k1 - k2))
            t2 = coef * g1[k1] * g1[k2]
            total += t1 - t2
            scale += abs(t1) + abs(t2)
    if total > 0 and scale <= _COND_MAX * total:
        return float(total)
    c = moment_c(m)
    return float(_expect(lambda x: (_ipow(x, b) - c) ** 2, m))


def _normaliser(m1: Margins, m2: Margins) -> tuple[float, float]:
    return moment_c(m1) * moment_c(m2), sqrt(moment_d(m1) * moment_d(m2))


def h_performance(y, m1: Margins, m2: Margins):
    """Standardised powered-cost product ``H(y1, y2)``.

    ``y`` is a pair, or an array whose last axis has length 2.  Its
    expectation under a simple max-stable pair is
    ``Corr(X1**beta1, X2**beta2)``.
    """
    y = np.asarray(y, dtype=float)
    cc, dd = _normaliser(m1, m2)
    x1 = frechet_to_gev(y[..., 0], m1)
    x2 = frechet_to_gev(y[..., 1], m2)
    out = (_ipow(x1, m1.beta) * _ipow(x2, m2.beta) - cc) / dd
    return float(out) if np.ndim(out) == 0 else out


def h_gradient(y, m1: Margins, m2: Margins):
    """Gradient of `h_performance` with respect to ``(y1, y2)``."""
    y = np.asarray(y, dtype=float)
    _, dd = _normaliser(m1, m2)
    y1, y2 = y[..., 0], y[..., 1]
    x1 = frechet_to_gev(y1, m1)
    x2 = frechet_to_gev(y2, m2)
    p1, p2 = _ipow(x1, m1.beta), _ipow(x2, m2.beta)
    dx1 = m1.tau * y1 ** (m1.xi - 1.0)
    dx2 = m2.tau * y2 ** (m2.xi - 1.0)
    g1 = m1.beta * _ipow(x1, m1.beta - 1) * dx1 * p2 / dd
    g2 = m2.beta * _ipow(x2, m2.beta - 1) * dx2 * p1 / dd
    return np.stack([g1, g2], axis=-1)
