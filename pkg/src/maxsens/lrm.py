"""Bivariate Brown-Resnick density, its score and the likelihood-ratio estimator.

For a pair with dependence ``h = sqrt(2 gamma)``, ``L = log(y2/y1)``,
``w = h/2 + L/h`` and ``v = h/2 - L/h``, the exponent measure is
``V = Phi(w)/y1 + Phi(v)/y2`` and the density is

    f(y1, y2) = exp(-V) * [Phi(w) Phi(v) + phi(w) y2 / h] / (y1 y2)**2,

using ``phi(w)/y1 = phi(v)/y2``.  The parameters enter only through ``h``,
so the score is ``dlogf/dh * (dh/dpsi, dh/dkappa)``.  The two components are
proportional with a factor that does not depend on ``y``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import log_ndtr

from .core import BrParams, Margins, SensitivityEstimate, h_performance
from .oracle import dh_dparams, pair_h
from .simulate import BrBatch, SimConfig, simulate_brown_resnick

__all__ = [
    "BivariateScore",
    "LrmEstimate",
    "DensityUnderflowWarning",
    "underflow_count",
    "bivariate_density",
    "log_bivariate_density",
    "dlogf_dh",
    "score",
    "lrm_from_batch",
    "lrm_estimate",
]

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_TINY = np.finfo(float).tiny
_underflows = 0


class DensityUnderflowWarning(RuntimeWarning):
    """The bivariate density underflowed and was clamped."""


def underflow_count() -> int:
    """Number of density values clamped to the smallest normal so far."""
    return _underflows


@dataclass(frozen=True)
class BivariateScore:
    """Score ``(dlogf/dpsi, dlogf/dkappa)``; entries may be arrays."""

    d_psi: float | np.ndarray
    d_kappa: float | np.ndarray


class LrmEstimate(NamedTuple):
    psi: SensitivityEstimate
    kappa: SensitivityEstimate


def _parts(y, h):
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("density arguments must be positive")
    if not np.all(np.asarray(h) > 0):
        raise ValueError(f"h must be positive, got {h}")
    ly1, ly2 = np.log(y[..., 0]), np.log(y[..., 1])
    L = ly2 - ly1
    w = 0.5 * h + L / h
    v = 0.5 * h - L / h
    return ly1, ly2, w, v


def log_bivariate_density(y, h):
    """Log of `bivariate_density`, evaluated without underflow."""
    ly1, ly2, w, v = _parts(y, h)
    lw, lv = log_ndtr(w), log_ndtr(v)
    lpw = -0.5 * w * w - _LOG_SQRT_2PI
    expo = np.exp(lw - ly1) + np.exp(lv - ly2)
    out = -expo - 2.0 * (ly1 + ly2) + np.logaddexp(lw + lv, lpw + ly2 - np.log(h))
    return float(out) if np.ndim(out) == 0 else out


def bivariate_density(y, h):
    """Density of a simple Brown-Resnick pair with dependence ``h``.

    Values that underflow are clamped to the smallest positive normal float.
    Each clamp is counted (see `underflow_count`) and reported by a
    `DensityUnderflowWarning`.
    """
    global _underflows
    out = np.exp(log_bivariate_density(y, h))
    small = out < _TINY
    if np.any(small):
        k = int(np.count_nonzero(small))
        _underflows += k
        warnings.warn(f"{k} density value(s) clamped to {_TINY}", DensityUnderflowWarning, stacklevel=2)
        out = np.maximum(out, _TINY)
    return float(out) if np.ndim(out) == 0 else out


def dlogf_dh(y, h):
    """``d log f / dh`` of the bivariate density, in closed form."""
    ly1, ly2, w, v = _parts(y, h)
    lw, lv = log_ndtr(w), log_ndtr(v)
    lpw = -0.5 * w * w - _LOG_SQRT_2PI
    lpv = -0.5 * v * v - _LOG_SQRT_2PI
    # K = Phi(w)Phi(v), J = s/h with s = phi(w) y2 = phi(v) y1; scale by exp(-m)
    lk = lw + lv
    lj = lpw + ly2 - np.log(h)
    m = np.maximum(lk, lj)
    k, j = np.exp(lk - m), np.exp(lj - m)
    dk = (v * np.exp(lpw + lv - m) + w * np.exp(lpv + lw - m)) / h
    dj = -j * (w * v + 1.0) / h
    out = -np.exp(lpw - ly1) + (dk + dj) / (k + j)
    return float(out) if np.ndim(out) == 0 else out


def score(y, params: BrParams, a, b) -> BivariateScore:
    """Score of the pair density at sites ``a, b`` with respect to ``(psi, kappa)``."""
    sites = (a, b)
    h = pair_h(params, sites)
    if h == 0:
        raise ValueError("coincident sites have no density")
    dh = dh_dparams(params, sites)
    s = dlogf_dh(y, h)
    return BivariateScore(d_psi=s * dh.psi, d_kappa=s * dh.kappa)


def lrm_from_batch(
    batch: BrBatch, params: BrParams, sites, m1: Margins, m2: Margins, seed: int = 0,
    stream_id: int = 0, performance: Callable | None = None,
) -> LrmEstimate:
    """Likelihood-ratio estimates of ``dR/dpsi`` and ``dR/dkappa`` from draws.

    Both estimates share the per-draw factor ``H(Y) dlogf/dh``.  Their
    relative errors therefore coincide.
    """
    h = pair_h(params, sites)
    dh = dh_dparams(params, sites)
    y = batch.values
    H = h_performance(y, m1, m2) if performance is None else np.asarray(performance(y), dtype=float)
    base = SensitivityEstimate.from_samples(H * dlogf_dh(y, h), seed, stream_id)

    def scaled(c):
        return SensitivityEstimate(base.value * c, base.std_error * abs(c), base.n_sims, base.seed, stream_id)

    return LrmEstimate(psi=scaled(dh.psi), kappa=scaled(dh.kappa))


def lrm_estimate(
    params: BrParams, sites, m1: Margins, m2: Margins, cfg: SimConfig,
    stream_id: int = 0, workers: int = 1, performance: Callable | None = None,
) -> LrmEstimate:
    """Simulate ``cfg.n_sims`` pairs and return the LRM sensitivity estimates.

    Parameters
    ----------
    params : BrParams
    sites : pair of Site
    m1, m2 : Margins
    cfg : SimConfig
    stream_id : int
        Replicate index selecting the random streams.
    workers : int
        Simulation threads; the estimate does not depend on it.
    performance : callable, optional
        Replacement for the powered-cost performance, mapping an ``(S, 2)``
        array of Fréchet draws to ``S`` values.
    """
    if len(sites) != 2:
        raise ValueError("the closed-form score needs exactly two sites")
    batch = simulate_brown_resnick(params, sites, cfg, stream_id=stream_id, workers=workers)
    return lrm_from_batch(batch, params, sites, m1, m2, cfg.seed, stream_id, performance)
