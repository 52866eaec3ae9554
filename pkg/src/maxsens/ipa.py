"""Pathwise (IPA) derivative of the Smith field with respect to Sigma.

The value at a site is realised by a single storm ``(u, c)``, almost surely:
``Y(x) = u phi(x - c; Sigma)``.  Holding that storm fixed,

    dlog Y(x) / dSigma = -1/2 (Sigma^-1 - Sigma^-1 (x-c)(x-c)' Sigma^-1),

and the chain rule through ``H`` gives an unbiased estimator of ``dR/dSigma``.
Partials are unconstrained: each entry perturbs ``sigma_ij`` alone.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .core import Margins, SigmaGradient, SmithParams, as_coords, h_gradient
from .simulate import SimConfig, SmithBatch, simulate_smith

__all__ = ["SigmaGradient", "dlog_y_dsigma", "ipa_from_batch", "ipa_estimate"]


def _dlog_batch(x: np.ndarray, c: np.ndarray, inv: np.ndarray) -> np.ndarray:
    a = (x - c) @ inv  # inv is exactly symmetric
    return -0.5 * (inv - a[..., :, None] * a[..., None, :])


def dlog_y_dsigma(site, storm_center, sigma: SmithParams) -> SigmaGradient:
    """Derivative of ``log Y(x)`` with respect to Sigma for a fixed realising storm."""
    x = as_coords(site)
    c = np.asarray(storm_center, dtype=float)
    if x.shape != c.shape or x.size != sigma.dim:
        raise ValueError(f"site {x.shape}, storm centre {c.shape} and sigma {sigma.dim} disagree")
    return SigmaGradient(_dlog_batch(x, c, np.asarray(sigma.inv)))


def ipa_from_batch(
    batch: SmithBatch, sigma: SmithParams, sites, m1: Margins, m2: Margins, seed: int = 0,
    stream_id: int = 0, performance_grad: Callable | None = None,
) -> SigmaGradient:
    """IPA estimate of ``dR/dSigma`` from Smith draws with their storms."""
    x = np.array([as_coords(s) for s in sites])
    y = batch.values
    gh = h_gradient(y, m1, m2) if performance_grad is None else np.asarray(performance_grad(y), dtype=float)
    dlog = _dlog_batch(x[None], batch.storm_c, np.asarray(sigma.inv))  # (S, M, d, d)
    # dY/dSigma = Y dlogY/dSigma avoids differentiating large values directly
    summand = np.einsum("sm,smij->sij", gh * y, dlog)
    n = summand.shape[0]
    se = summand.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(summand[0])
    return SigmaGradient(summand.mean(axis=0), se, n, int(seed), int(stream_id))


def ipa_estimate(
    sigma: SmithParams, sites, m1: Margins, m2: Margins, cfg: SimConfig,
    stream_id: int = 0, workers: int = 1, performance_grad: Callable | None = None,
) -> SigmaGradient:
    """Simulate ``cfg.n_sims`` Smith pairs and return the IPA gradient estimate.

    Parameters
    ----------
    sigma : SmithParams
    sites : pair of Site
    m1, m2 : Margins
    cfg : SimConfig
    stream_id, workers
        Replicate stream and simulation threads, as in `simulate_smith`.
    performance_grad : callable, optional
        Replacement for `h_gradient`, mapping ``(S, 2)`` draws to ``(S, 2)``.
    """
    batch = simulate_smith(sigma, sites, cfg, stream_id=stream_id, workers=workers)
    return ipa_from_batch(batch, sigma, sites, m1, m2, cfg.seed, stream_id, performance_grad)
