"""Finite-site simulation of Brown-Resnick and Smith max-stable fields.

Brown-Resnick draws are exact, via extremal functions: site ``k`` is visited
in turn and receives Poisson arrivals ``zeta`` paired with log-Gaussian
spectral vectors normalised at ``x_k``.  A candidate ``zeta * Y`` is kept only
if it does not exceed the current value at any earlier site, and the sweep at
site ``k`` stops once ``zeta`` drops below the current value there.

Smith draws use the storm representation.  Storm centres are uniform on the
bounding box of the sites inflated by ``truncation_radius``.  Intensities
come from Poisson arrivals with mass equal to the box volume.  Storms are
drawn in rounds until no remaining storm can raise any site value.  The
storm realising each site maximum is kept for pathwise differentiation.

Both simulators are vectorised over draws.  Draws are cut into fixed blocks,
and block ``b`` of replicate ``stream_id`` owns the random stream
``RngStream(seed, stream_id, (b,))``.  The output is therefore bit-identical
for any number of worker threads.
"""
from __future__ import annotations

import csv
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import ceil, exp, pi, sqrt

import numpy as np
from scipy.special import ndtr

from .core import BrParams, DimensionError, ParameterError, SmithParams, as_coords
from .gauss import RngStream

__all__ = [
    "SimConfig",
    "BrSimOutput",
    "SmithSimOutput",
    "BrBatch",
    "SmithBatch",
    "TruncationError",
    "TruncationWarning",
    "br_gamma_matrix",
    "simulate_brown_resnick",
    "simulate_smith",
    "write_batch_csv",
]

_PEAK_RATIO_MAX = 1e-12
_TAIL_WARN = 1e-9


class TruncationError(ParameterError):
    """Truncation radius too small for the storm profile."""


class TruncationWarning(UserWarning):
    """Non-negligible storm mass falls outside the simulation box."""


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    Attributes
    ----------
    n_sims : int
        Number of draws.
    seed : int
        Root seed of the random streams.
    truncation_radius : float
        Inflation of the Smith simulation box around the sites.
    block_size : int
        Draws per random-stream block.  Changing it changes the draws.
    common_random_numbers : bool
        Consume randomness for every draw of a block in every simulation
        round.  The random numbers attached to (draw, round) then do not
        depend on the parameters, which couples runs at nearby parameters.
        This is slower and only needed for finite-difference controls.
    """

    n_sims: int
    seed: int = 0
    truncation_radius: float = 15.0
    block_size: int = 10_000
    common_random_numbers: bool = False

    def __post_init__(self):
        if int(self.n_sims) != self.n_sims or self.n_sims < 1:
            raise ValueError(f"n_sims must be a positive integer, got {self.n_sims}")
        if not self.truncation_radius > 0:
            raise ValueError(f"truncation_radius must be positive, got {self.truncation_radius}")
        if int(self.block_size) != self.block_size or self.block_size < 1:
            raise ValueError("block_size must be a positive integer")
        RngStream(self.seed)  # validates the seed range


@dataclass(frozen=True)
class BrSimOutput:
    values: np.ndarray


@dataclass(frozen=True)
class SmithSimOutput:
    values: np.ndarray
    storm_u: np.ndarray
    storm_c: np.ndarray


@dataclass(frozen=True)
class BrBatch:
    """``values[s, j]``: draw ``s`` at site ``j``."""

    values: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, s) -> BrSimOutput:
        return BrSimOutput(self.values[s])


@dataclass(frozen=True)
class SmithBatch:
    """Smith draws with the storm ``(u, c)`` realising each site value.

    ``values[s, j] == storm_u[s, j] * phi(x_j - storm_c[s, j], Sigma)``.
    """

    values: np.ndarray
    storm_u: np.ndarray
    storm_c: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, s) -> SmithSimOutput:
        return SmithSimOutput(self.values[s], self.storm_u[s], self.storm_c[s])


def _site_array(sites, dim=None) -> np.ndarray:
    x = np.array([as_coords(s) for s in sites], dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionError("need at least one site, all of the same dimension")
    if dim is not None and x.shape[1] != dim:
        raise DimensionError(f"sites of dimension {x.shape[1]} for a {dim}-dimensional model")
    if len({tuple(r) for r in x}) != len(x):
        raise ParameterError("sites must be distinct")
    return x


def br_gamma_matrix(params: BrParams, x: np.ndarray) -> np.ndarray:
    """Semivariogram matrix ``(|x_i - x_j| / kappa) ** psi``."""
    dist = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    return (dist / params.kappa) ** params.psi


def _blocks(cfg: SimConfig):
    nb = ceil(cfg.n_sims / cfg.block_size)
    return [(b, min(cfg.block_size, cfg.n_sims - b * cfg.block_size)) for b in range(nb)]


def _run_blocks(fn, cfg: SimConfig, stream_id: int, workers: int):
    root = RngStream(cfg.seed, stream_id)
    jobs = [(root.child(b).generator(), n) for b, n in _blocks(cfg)]
    if workers <= 1 or len(jobs) == 1:
        return [fn(g, n) for g, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def _br_block(gen, n, gam, chols, crn):
    M = gam.shape[0]
    Z = np.zeros((n, M))
    for k in range(M):
        others = np.arange(M) != k
        L = chols[k]
        drift = gam[k, others]
        E = gen.standard_exponential(n)
        zeta = 1.0 / E
        active = np.flatnonzero(zeta > Z[:, k])
        while active.size:
            if crn:
                z = gen.standard_normal((n, M - 1))[active]
                e = gen.standard_exponential(n)[active]
            else:
                z = gen.standard_normal((active.size, M - 1))
                e = gen.standard_exponential(active.size)
            cand = np.empty((active.size, M))
            cand[:, k] = zeta[active]
            cand[:, others] = zeta[active, None] * np.exp(z @ L.T - drift)
            if k:
                ok = np.all(cand[:, :k] < Z[active, :k], axis=1)
                rows = active[ok]
                Z[rows] = np.maximum(Z[rows], cand[ok])
            else:
                Z[active] = np.maximum(Z[active], cand)
            E[active] += e
            zeta[active] = 1.0 / E[active]
            active = active[zeta[active] > Z[active, k]]
    return Z


def simulate_brown_resnick(
    params: BrParams, sites, cfg: SimConfig, stream_id: int = 0, workers: int = 1
) -> BrBatch:
    """Exact draws of a Brown-Resnick field at ``sites``.

    The Gaussian field has semivariogram ``gamma(x) = (|x|/kappa)**psi``, so
    pairs follow the Hüsler-Reiss law with ``h = sqrt(2 gamma)``.  Spectral
    vectors seen from site ``k`` are ``exp(G_j - gamma_kj)`` with
    ``Cov(G_j, G_m) = gamma_kj + gamma_km - gamma_jm``.

    Parameters
    ----------
    params : BrParams
    sites : sequence of Site or coordinate vectors
    cfg : SimConfig
    stream_id : int
        Replicate index.  It selects an independent family of random streams.
    workers : int
        Threads used over blocks; the result does not depend on it.
    """
    x = _site_array(sites)
    gam = br_gamma_matrix(params, x)
    M = len(x)
    chols = []
    for k in range(M):
        o = np.arange(M) != k
        omega = gam[k, o][:, None] + gam[k, o][None, :] - gam[np.ix_(o, o)]
        chols.append(np.linalg.cholesky(omega) if M > 1 else np.zeros((0, 0)))
    parts = _run_blocks(
        lambda g, n: _br_block(g, n, gam, chols, cfg.common_random_numbers), cfg, stream_id, workers
    )
    return BrBatch(np.concatenate(parts))


def _smith_box(x: np.ndarray, sigma: SmithParams, r: float):
    lam_max = float(np.linalg.eigvalsh(sigma.sigma)[-1])
    if exp(-0.5 * r * r / lam_max) > _PEAK_RATIO_MAX:
        raise TruncationError(
            f"truncation radius {r} leaves a storm profile above {_PEAK_RATIO_MAX} of its peak; "
            f"need r >= {sqrt(2.0 * lam_max * np.log(1.0 / _PEAK_RATIO_MAX)):.3g}"
        )
    # mass of a site's storm profile lying outside the box, summed over axes
    sd = np.sqrt(np.diag(sigma.sigma))
    tail = float(np.sum(2.0 * ndtr(-r / sd)))
    if tail > _TAIL_WARN:
        warnings.warn(
            f"neglected storm mass up to {tail:.3g} per site at truncation radius {r}",
            TruncationWarning, stacklevel=3,
        )
    return x.min(axis=0) - r, x.max(axis=0) + r


def _smith_block(gen, n, x, lo, hi, linv, phimax, crn, width):
    M, d = x.shape
    area = float(np.prod(hi - lo))
    xw = x @ linv.T  # whitened sites: quadratic forms become squared distances
    Y = np.zeros((n, M))
    U = np.zeros((n, M))
    C = np.zeros((n, M, d))
    G = np.zeros(n)
    active = np.arange(n)
    while active.size:
        if crn:
            e = gen.standard_exponential((n, width))[active]
            c = gen.random((n, width, d))[active]
        else:
            e = gen.standard_exponential((active.size, width))
            c = gen.random((active.size, width, d))
        c = lo + (hi - lo) * c
        cw = c @ linv.T
        g = G[active, None] + np.cumsum(e, axis=1)
        u = area / g
        Ya = Y[active]
        for j in range(M):
            q = np.square(xw[j, 0] - cw[..., 0])
            for i in range(1, d):
                q += np.square(xw[j, i] - cw[..., i])
            vals = u * phimax * np.exp(-0.5 * q)
            best = np.argmax(vals, axis=1)  # first index wins exact ties
            bv = vals[np.arange(active.size), best]
            ra = np.flatnonzero(bv > Ya[:, j])
            rows = active[ra]
            kk = best[ra]
            Y[rows, j] = bv[ra]
            U[rows, j] = u[ra, kk]
            C[rows, j] = c[ra, kk]
        G[active] = g[:, -1]
        active = active[area / G[active] * phimax >= Y[active].min(axis=1)]
    return Y, U, C


def simulate_smith(
    params: SmithParams, sites, cfg: SimConfig, stream_id: int = 0, workers: int = 1,
    storms_per_round: int = 32,
) -> SmithBatch:
    """Storm-process draws of a Smith field with the realising storm per site.

    Parameters
    ----------
    params : SmithParams
    sites : sequence of Site or coordinate vectors
    cfg : SimConfig
        ``truncation_radius`` sets the box inflation; it must push the storm
        profile below ``1e-12`` of its peak along every direction.
    stream_id, workers
        As in `simulate_brown_resnick`.
    storms_per_round : int
        Storms drawn per active draw in each vectorised round.  It changes
        the draws but not their law.
    """
    x = _site_array(sites, params.dim)
    lo, hi = _smith_box(x, params, cfg.truncation_radius)
    d = params.dim
    phimax = 1.0 / ((2.0 * pi) ** (0.5 * d) * sqrt(float(np.linalg.det(params.sigma))))
    linv = np.linalg.inv(params.chol)
    parts = _run_blocks(
        lambda g, n: _smith_block(
            g, n, x, lo, hi, linv, phimax, cfg.common_random_numbers, storms_per_round
        ),
        cfg, stream_id, workers,
    )
    return SmithBatch(*(np.concatenate(p) for p in zip(*parts)))


def write_batch_csv(batch, path) -> None:
    """Dump a batch as ``sim_id, site_id, value[, storm_u, storm_c1..cd]`` rows."""
    smith = isinstance(batch, SmithBatch)
    S, M = batch.values.shape
    header = ["sim_id", "site_id", "value"]
    if smith:
        d = batch.storm_c.shape[-1]
        header += ["storm_u"] + [f"storm_c{i + 1}" for i in range(d)]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for s in range(S):
                for j in range(M):
                    row = [s, j, repr(float(batch.values[s, j]))]
                    if smith:
                        row.append(repr(float(batch.storm_u[s, j])))
                        row += [repr(float(v)) for v in batch.storm_c[s, j]]
                    w.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write batch to {path}: {exc}") from exc
