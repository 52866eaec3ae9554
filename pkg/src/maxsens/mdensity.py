"""Exponent measure, block derivatives and density of Hüsler-Reiss vectors.

For a Brown-Resnick field observed at ``M`` sites with semivariogram matrix
``gamma``, the exponent measure is

    V(y) = sum_i Phi_{M-1}(z^(i); Omega^(i)) / y_i,
    z^(i)_j = log(y_j / y_i) + gamma_ij,
    Omega^(i)_jm = gamma_ij + gamma_im - gamma_jm,   j, m != i.

The density is ``exp(-V) * sum_pi prod_{B in pi} (-d^|B| V / dy_B)`` over
set partitions ``pi``.  Each block derivative is an average over the anchors
``i in B``.  Each anchor contributes a Gaussian density of the in-block
coordinates times a conditional Gaussian probability of the out-of-block
coordinates.

The partition sum is enumerated for ``M <= 5``.  It is approximated in
general by a Gibbs sampler on partitions whose stationary law is
proportional to the summands.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import log, pi
from typing import Iterator, NamedTuple

import numpy as np

from .core import BrParams, DimensionError, as_coords
from .gauss import MAX_MVN_DIM, RngStream, _as_generator, mvn_cdf
from .simulate import br_gamma_matrix

__all__ = [
    "HrStructure",
    "Partition",
    "DensityScore",
    "set_partitions",
    "exponent_measure",
    "block_derivative",
    "density_faa_di_bruno",
    "gibbs_partition_step",
    "gibbs_sweep",
    "mc_density_and_score",
    "MAX_EXACT_M",
]

MAX_EXACT_M = 5


@dataclass(frozen=True, eq=False)
class HrStructure:
    """Hüsler-Reiss dependence of a Brown-Resnick field at fixed sites.

    Attributes
    ----------
    params : BrParams
    sites : ndarray, shape (M, d)
    gamma : ndarray, shape (M, M)
        Semivariogram ``gamma(x_i - x_j)``.
    lam : ndarray, shape (M, M)
        ``sqrt(gamma / 2)``; symmetric with zero diagonal.
    omega : list of ndarray
        ``omega[i]`` is the ``(M-1) x (M-1)`` matrix ``Omega^(i)``.
    """

    params: BrParams
    sites: np.ndarray
    gamma: np.ndarray = field(init=False, repr=False)
    lam: np.ndarray = field(init=False, repr=False)
    omega: list = field(init=False, repr=False)

    def __post_init__(self):
        x = np.array([as_coords(s) for s in self.sites], dtype=float)
        if x.ndim != 2 or len(x) < 1:
            raise DimensionError("need at least one site")
        if len({tuple(r) for r in x}) != len(x):
            raise ValueError("sites must be distinct")
        gam = br_gamma_matrix(self.params, x)
        M = len(x)
        omegas = []
        for i in range(M):
            o = np.arange(M) != i
            om = gam[i, o][:, None] + gam[i, o][None, :] - gam[np.ix_(o, o)]
            if M > 1:
                np.linalg.cholesky(om)  # raises on a degenerate site configuration
            omegas.append(om)
        x.setflags(write=False)
        object.__setattr__(self, "sites", x)
        object.__setattr__(self, "gamma", gam)
        object.__setattr__(self, "lam", np.sqrt(0.5 * gam))
        object.__setattr__(self, "omega", omegas)

    @property
    def M(self) -> int:
        return self.sites.shape[0]

    def with_params(self, params: BrParams) -> "HrStructure":
        return HrStructure(params, self.sites)


@dataclass(frozen=True)
class Partition:
    """Set partition of ``{0, ..., M-1}`` stored as canonical block labels.

    ``block_of[i]`` is the block of site ``i``.  Labels are numbered by
    first appearance, so equal partitions compare equal.
    """

    block_of: tuple[int, ...]

    def __post_init__(self):
        relabel: dict[int, int] = {}
        canon = tuple(relabel.setdefault(int(b), len(relabel)) for b in self.block_of)
        object.__setattr__(self, "block_of", canon)

    @classmethod
    def from_blocks(cls, blocks) -> "Partition":
        labels = {}
        for k, blk in enumerate(blocks):
            for i in blk:
                if i in labels:
                    raise ValueError(f"site {i} appears in two blocks")
                labels[i] = k
        M = len(labels)
        if sorted(labels) != list(range(M)):
            raise ValueError("blocks must cover 0..M-1 exactly")
        return cls(tuple(labels[i] for i in range(M)))

    @property
    def M(self) -> int:
        return len(self.block_of)

    @property
    def blocks(self) -> list[frozenset]:
        out: dict[int, set] = {}
        for i, b in enumerate(self.block_of):
            out.setdefault(b, set()).add(i)
        return [frozenset(out[b]) for b in sorted(out)]


class DensityScore(NamedTuple):
    density: float
    score: np.ndarray  # (d/dpsi, d/dkappa) of log f


def set_partitions(M: int) -> Iterator[Partition]:
    """All set partitions of ``{0, ..., M-1}`` (restricted growth strings)."""

    def rec(prefix, top):
        if len(prefix) == M:
            yield Partition(tuple(prefix))
            return
        for b in range(top + 2):
            yield from rec(prefix + [b], max(top, b))

    if M < 1:
        return
    yield from rec([0], 0)


def _check_y(y, hr: HrStructure) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (hr.M,):
        raise DimensionError(f"expected {hr.M} values, got shape {y.shape}")
    if np.any(y <= 0):
        raise ValueError("values must be positive")
    return y


def exponent_measure(y, hr: HrStructure) -> float:
    """``V(y)`` with ``P(Y <= y) = exp(-V(y))``."""
    y = _check_y(y, hr)
    M = hr.M
    if M - 1 > MAX_MVN_DIM:
        raise DimensionError(f"exponent measure supports M <= {MAX_MVN_DIM + 1}")
    ly = np.log(y)
    total = 0.0
    for i in range(M):
        o = np.arange(M) != i
        p = 1.0 if M == 1 else mvn_cdf(ly[o] - ly[i] + hr.gamma[i, o], hr.omega[i])
        total += p / y[i]
    return float(total)


def _log_gauss_density(z, cov) -> float:
    L = np.linalg.cholesky(cov)
    a = np.linalg.solve(L, z)
    return float(-0.5 * a @ a - np.log(np.diag(L)).sum() - 0.5 * len(z) * log(2.0 * pi))


def block_derivative(y, B, hr: HrStructure) -> float:
    """``-d^|B| V / dy_B``, the mixed partial over the sites in ``B`` (>= 0).

    Parameters
    ----------
    y : array_like, shape (M,)
    B : iterable of int
        Nonempty set of site indices.
    hr : HrStructure
    """
    y = _check_y(y, hr)
    M = hr.M
    B = sorted(set(int(i) for i in B))
    if not B or B[0] < 0 or B[-1] >= M:
        raise ValueError(f"block must be a nonempty subset of 0..{M - 1}, got {B}")
    if M - len(B) > MAX_MVN_DIM:
        raise DimensionError("complement of the block is too large for mvn_cdf")
    ly = np.log(y)
    out = np.setdiff1d(np.arange(M), B)
    acc = 0.0
    for i in B:
        rest = [j for j in range(M) if j != i]
        pos = {j: k for k, j in enumerate(rest)}
        inb = [pos[j] for j in B if j != i]
        cmp = [pos[j] for j in out]
        z = ly[rest] - ly[i] + hr.gamma[i, rest]
        om = hr.omega[i]
        if inb:
            r_b = om[np.ix_(inb, inb)]
            dens = np.exp(_log_gauss_density(z[inb], r_b))
        else:
            dens = 1.0
        if cmp:
            if inb:
                r_cb = om[np.ix_(cmp, inb)]
                k = np.linalg.solve(r_b, r_cb.T).T
                mu = k @ z[inb]
                p = om[np.ix_(cmp, cmp)] - k @ r_cb.T
                p = 0.5 * (p + p.T)
            else:
                mu = np.zeros(len(cmp))
                p = om[np.ix_(cmp, cmp)]
            prob = mvn_cdf(z[cmp] - mu, p)
        else:
            prob = 1.0
        acc += dens * prob / y[i]
    return float(acc / (len(B) * np.prod(y[B])))


def _partition_weight(part: Partition, y, hr, cache) -> float:
    w = 1.0
    for blk in part.blocks:
        if blk not in cache:
            cache[blk] = block_derivative(y, blk, hr)
        w *= cache[blk]
    return w


def density_faa_di_bruno(y, hr: HrStructure) -> float:
    """Exact density by summing over all set partitions (``M <= 5``)."""
    y = _check_y(y, hr)
    if hr.M > MAX_EXACT_M:
        raise DimensionError(f"exact enumeration supports M <= {MAX_EXACT_M}, got {hr.M}")
    cache: dict = {}
    total = sum(_partition_weight(p, y, hr, cache) for p in set_partitions(hr.M))
    return float(np.exp(-exponent_measure(y, hr)) * total)


def _conditional(current: Partition, site: int, y, hr, cache):
    # candidate partitions for `site` with the others fixed, and their weights
    labels = list(current.block_of)
    others = {labels[j] for j in range(len(labels)) if j != site}
    cands = []
    for b in sorted(others) + [max(labels) + 1]:
        lab = labels.copy()
        lab[site] = b
        cands.append(Partition(tuple(lab)))
    w = np.array([_partition_weight(c, y, hr, cache) for c in cands])
    return cands, w / w.sum()


def gibbs_partition_step(
    current: Partition, y, hr: HrStructure, rng, site: int | None = None, cache=None
) -> Partition:
    """Resample the block of one site from its full conditional.

    The conditional is proportional to the product of block derivatives of
    the resulting partition.  ``site`` defaults to a uniformly random index.
    """
    y = _check_y(y, hr)
    if current.M != hr.M:
        raise DimensionError("partition size does not match the number of sites")
    gen = _as_generator(rng)
    if hr.M == 1:
        return current
    if site is None:
        site = int(gen.integers(hr.M))
    cands, p = _conditional(current, site, y, hr, {} if cache is None else cache)
    return cands[int(gen.choice(len(cands), p=p))]


def gibbs_sweep(current: Partition, y, hr: HrStructure, rng, cache=None) -> Partition:
    """One systematic sweep: update sites ``0, ..., M-1`` in order."""
    gen = _as_generator(rng)
    cache = {} if cache is None else cache
    for site in range(hr.M):
        current = gibbs_partition_step(current, y, hr, gen, site=site, cache=cache)
    return current


def mc_density_and_score(
    y, hr: HrStructure, n_gibbs: int | None = None, rng=None, burn_in: int | None = None,
    rel_step: float = 1e-5,
) -> DensityScore:
    """Gibbs approximation of the density and of the ``(psi, kappa)`` score.

    Parameters
    ----------
    y : array_like, shape (M,)
    hr : HrStructure
        Carries the parameters at which the score is evaluated.
    n_gibbs : int, optional
        Retained sweeps; default ``10 * M``.
    rng : RngStream or numpy Generator
    burn_in : int, optional
        Discarded sweeps; default ``10 * M``.
    rel_step : float
        Relative step of the central differences in ``psi`` and ``kappa``.

    Returns
    -------
    DensityScore
        ``density`` is ``exp(-V) w(pi*) / g_hat(pi*)``.  Here ``pi*`` is the
        heaviest partition met during burn-in and ``g_hat(pi*)`` is the
        average probability that a single-site update lands on ``pi*``.  The
        score is ``-dV/dtheta`` plus the chain average of
        ``sum_B dlog(-d^|B|V/dy_B)/dtheta``.
    """
    y = _check_y(y, hr)
    M = hr.M
    n_gibbs = 10 * M if n_gibbs is None else int(n_gibbs)
    burn_in = 10 * M if burn_in is None else int(burn_in)
    if n_gibbs < 1:
        raise ValueError("n_gibbs must be positive")
    gen = _as_generator(rng if rng is not None else RngStream(0))
    p0 = hr.params
    shifted = []
    for name in ("psi", "kappa"):
        step = rel_step * abs(getattr(p0, name))
        up = BrParams(**{**p0.__dict__, name: getattr(p0, name) + step})
        dn = BrParams(**{**p0.__dict__, name: getattr(p0, name) - step})
        shifted.append((hr.with_params(up), hr.with_params(dn), 2.0 * step))

    cache: dict = {}
    dcache: dict = {}

    def dlog_block(blk):
        if blk not in dcache:
            dcache[blk] = np.array([
                (log(block_derivative(y, blk, u)) - log(block_derivative(y, blk, d))) / s
                for u, d, s in shifted
            ])
        return dcache[blk]

    current = Partition((0,) * M)
    best, best_w = current, _partition_weight(current, y, hr, cache)
    for _ in range(burn_in):
        current = gibbs_sweep(current, y, hr, gen, cache)
        w = _partition_weight(current, y, hr, cache)
        if w > best_w:
            best, best_w = current, w

    score_acc = np.zeros(2)
    hit = 0.0
    n_updates = 0
    for _ in range(n_gibbs):
        for site in range(M):
            if M > 1:
                cands, p = _conditional(current, site, y, hr, cache)
                hit += sum(pk for c, pk in zip(cands, p) if c == best)
                current = cands[int(gen.choice(len(cands), p=p))]
            else:
                hit += 1.0
            n_updates += 1
        score_acc += sum((dlog_block(b) for b in current.blocks), np.zeros(2))
    g_hat = hit / n_updates
    V = exponent_measure(y, hr)
    dV = np.array([(exponent_measure(y, u) - exponent_measure(y, d)) / s for u, d, s in shifted])
    if g_hat == 0.0:
        raise ArithmeticError("reference partition never reached; increase n_gibbs")
    density = float(np.exp(-V) * best_w / g_hat)
    return DensityScore(density, -dV + score_acc / n_gibbs)
