"""Common-random-number finite differences of the simulated expected performance.

These are biased controls for the unbiased LRM and IPA estimators.  Draws at
``theta + step`` and ``theta - step`` share every random number, so each draw
gives one difference quotient ``(H(Y+) - H(Y-)) / (2 step)``.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .core import BrParams, Margins, SensitivityEstimate, SigmaGradient, SmithParams, h_performance
from .oracle import BrGradient
from .simulate import SimConfig, simulate_brown_resnick, simulate_smith

__all__ = ["fd_sensitivity_br", "fd_sensitivity_smith", "fd_correlation"]


def _crn(cfg: SimConfig) -> SimConfig:
    return replace(cfg, common_random_numbers=True)


def fd_sensitivity_br(
    params: BrParams, sites, m1: Margins, m2: Margins, cfg: SimConfig,
    step: float = 1e-3, stream_id: int = 0, workers: int = 1,
) -> BrGradient:
    """Central CRN differences of ``R`` in ``psi`` and ``kappa``."""
    cfg = _crn(cfg)
    out = {}
    for name in ("psi", "kappa"):
        v = getattr(params, name)
        up = replace(params, **{name: v + step})
        dn = replace(params, **{name: v - step})
        yu = simulate_brown_resnick(up, sites, cfg, stream_id, workers).values
        yd = simulate_brown_resnick(dn, sites, cfg, stream_id, workers).values
        q = (h_performance(yu, m1, m2) - h_performance(yd, m1, m2)) / (2.0 * step)
        out[name] = SensitivityEstimate.from_samples(q, cfg.seed, stream_id)
    return BrGradient(**out)


def fd_sensitivity_smith(
    sigma: SmithParams, sites, m1: Margins, m2: Margins, cfg: SimConfig,
    step: float = 1e-3, stream_id: int = 0, workers: int = 1,
) -> SigmaGradient:
    """Central CRN differences of ``R`` in each entry of Sigma.

    Sigma must stay symmetric, so an off-diagonal pair is moved together
    and the tied difference is halved.  This gives the unconstrained partial
    used by the IPA estimator.
    """
    cfg = _crn(cfg)
    d = sigma.dim
    val = np.zeros((d, d))
    se = np.zeros((d, d))
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = step
            yu = simulate_smith(SmithParams(sigma.sigma + e), sites, cfg, stream_id, workers).values
            yd = simulate_smith(SmithParams(sigma.sigma - e), sites, cfg, stream_id, workers).values
            q = (h_performance(yu, m1, m2) - h_performance(yd, m1, m2)) / (2.0 * step)
            if i != j:
                q = 0.5 * q
            est = SensitivityEstimate.from_samples(q, cfg.seed, stream_id)
            val[i, j] = val[j, i] = est.value
            se[i, j] = se[j, i] = est.std_error
    return SigmaGradient(val, se, cfg.n_sims, cfg.seed, stream_id)


def fd_correlation(dep, sites, m1: Margins, m2: Margins, cfg: SimConfig, stream_id: int = 0) -> SensitivityEstimate:
    """Plain Monte Carlo estimate of ``R = E[H(Y)]``."""
    if isinstance(dep, BrParams):
        y = simulate_brown_resnick(dep, sites, cfg, stream_id).values
    else:
        y = simulate_smith(dep, sites, cfg, stream_id).values
    return SensitivityEstimate.from_samples(h_performance(y, m1, m2), cfg.seed, stream_id)
