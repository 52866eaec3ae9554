"""Replicated sensitivity experiments: configuration, execution and output.

A configuration is a JSON object, for example::

    {
      "model": "brown_resnick",
      "method": "lrm",
      "dependence": {"kappa": 3.05, "psi": 0.86},
      "sites": [[0, 0], [1, 1]],
      "margins": {"eta": 26.11, "tau": 2.90, "xi": -0.11, "beta": 2},
      "n_sims": 100000,
      "n_replicates": 100,
      "seed": 1
    }

``model`` is ``brown_resnick`` or ``smith``.  A Smith dependence is
``{"sigma": [[...], [...]]}``.  ``margins`` is a single object, used at both
sites, or a list with one object per site.  ``method`` is one of ``lrm``,
``ipa``, ``oracle`` and ``fd_check``.  Optional keys are ``truncation_radius``
(default 15), ``fd_step`` (default 1e-3), ``block_size`` and ``output``.

Replicate ``r`` uses random stream ``r``.  Rows are assembled in replicate
order, so the output bytes do not depend on the number of threads.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import BrParams, Margins, ParameterError, SmithParams
from .fdcheck import fd_sensitivity_br, fd_sensitivity_smith
from .ipa import ipa_estimate
from .lrm import lrm_estimate
from .oracle import analytic_correlation, analytic_sensitivity
from .simulate import SimConfig

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ResultRow",
    "CSV_HEADER",
    "load_config",
    "parse_config",
    "run_experiment",
    "rows_to_csv",
    "emit_csv",
    "emit_json",
]

MODELS = ("brown_resnick", "smith")
METHODS = ("lrm", "ipa", "oracle", "fd_check")
CSV_HEADER = ["method", "model", "param", "replicate", "estimate", "std_error", "true_value", "rel_error"]


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    method: str
    dependence: object  # BrParams or SmithParams
    sites: tuple
    margins: tuple  # one Margins per site
    n_sims: int = 10_000
    n_replicates: int = 1
    seed: int = 0
    truncation_radius: float = 15.0
    fd_step: float = 1e-3
    block_size: int = 10_000
    output: str | None = None

    def sim_config(self) -> SimConfig:
        return SimConfig(self.n_sims, self.seed, self.truncation_radius, self.block_size)


@dataclass(frozen=True)
class ResultRow:
    method: str
    model: str
    param: str
    replicate: int
    estimate: float
    std_error: float
    true_value: float | None = None
    rel_error: float | None = None


def _field(raw: dict, key, cast, default=None, required=False):
    if key not in raw:
        if required:
            raise ConfigError(f"{key}: missing required field")
        return default
    try:
        return cast(raw[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _int(v):
    if isinstance(v, bool) or int(v) != v:
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


def parse_config(raw: dict, **overrides) -> ExperimentConfig:
    """Validate a configuration mapping; raises `ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    known = {f.name for f in fields(ExperimentConfig)}
    extra = sorted(set(raw) - known)
    if extra:
        raise ConfigError(f"{extra[0]}: unknown field")
    model = _field(raw, "model", str, required=True)
    if model not in MODELS:
        raise ConfigError(f"model: expected one of {MODELS}, got {model!r}")
    method = _field(raw, "method", str, required=True)
    if method not in METHODS:
        raise ConfigError(f"method: expected one of {METHODS}, got {method!r}")

    dep = raw.get("dependence")
    if not isinstance(dep, dict):
        raise ConfigError("dependence: expected an object")
    try:
        if model == "brown_resnick":
            if set(dep) != {"kappa", "psi"}:
                raise ConfigError("dependence: brown_resnick needs exactly 'kappa' and 'psi'")
            dependence = BrParams(kappa=float(dep["kappa"]), psi=float(dep["psi"]))
        else:
            if set(dep) != {"sigma"}:
                raise ConfigError("dependence: smith needs exactly 'sigma'")
            dependence = SmithParams(np.asarray(dep["sigma"], dtype=float))
    except ParameterError as exc:
        raise ConfigError(f"dependence: {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"dependence: {exc}") from None

    try:
        sites = tuple(tuple(float(c) for c in s) for s in raw.get("sites", ()))
    except (TypeError, ValueError):
        raise ConfigError("sites: expected a list of coordinate lists") from None
    if len(sites) != 2:
        raise ConfigError(f"sites: the sensitivity methods need exactly 2 sites, got {len(sites)}")
    if len({len(s) for s in sites}) != 1 or not all(np.isfinite(c) for s in sites for c in s):
        raise ConfigError("sites: coordinates must be finite and of equal dimension")
    if sites[0] == sites[1]:
        raise ConfigError("sites: the two sites must differ")
    if model == "smith" and len(sites[0]) != dependence.dim:
        raise ConfigError(f"sites: dimension {len(sites[0])} does not match sigma ({dependence.dim})")

    mraw = raw.get("margins")
    if isinstance(mraw, dict):
        mraw = [mraw, mraw]
    if not isinstance(mraw, list) or len(mraw) != 2:
        raise ConfigError("margins: expected an object or a list of 2 objects")
    margins = []
    for k, m in enumerate(mraw):
        try:
            margins.append(Margins(float(m["eta"]), float(m["tau"]), float(m["xi"]), m["beta"]))
        except KeyError as exc:
            raise ConfigError(f"margins[{k}]: missing {exc.args[0]}") from None
        except (ParameterError, TypeError, ValueError) as exc:
            raise ConfigError(f"margins[{k}]: {exc}") from None

    if method == "ipa" and model != "smith":
        raise ConfigError("method: ipa requires model 'smith'")
    if method == "lrm" and model != "brown_resnick":
        raise ConfigError("method: lrm requires model 'brown_resnick'")

    n_sims = _field(raw, "n_sims", _int, 10_000)
    n_rep = _field(raw, "n_replicates", _int, 1)
    seed = _field(raw, "seed", _int, 0)
    if n_sims < 2:
        raise ConfigError("n_sims: must be at least 2")
    if n_rep < 1:
        raise ConfigError("n_replicates: must be positive")
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must be a 64-bit unsigned integer")
    r = _field(raw, "truncation_radius", float, 15.0)
    if not r > 0:
        raise ConfigError("truncation_radius: must be positive")
    step = _field(raw, "fd_step", float, 1e-3)
    if not step > 0:
        raise ConfigError("fd_step: must be positive")
    block = _field(raw, "block_size", _int, 10_000)
    if block < 1:
        raise ConfigError("block_size: must be positive")
    output = _field(raw, "output", str)
    return ExperimentConfig(
        model, method, dependence, sites, tuple(margins), n_sims, n_rep, seed, r, step, block, output
    )


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, **overrides)


def _param_names(dep) -> list[str]:
    if isinstance(dep, BrParams):
        return ["psi", "kappa"]
    d = dep.dim
    return [f"sigma{i + 1}{j + 1}" for i in range(d) for j in range(d)]


def _flatten(dep, grad, with_se: bool) -> list[tuple[float, float]]:
    """(value, std_error) per parameter in `_param_names` order."""
    if isinstance(dep, BrParams):
        pairs = [grad.psi, grad.kappa]
        return [(p.value, p.std_error) if with_se else (float(p), 0.0) for p in pairs]
    d = dep.dim
    se = grad.std_error if with_se else np.zeros((d, d))
    return [(float(grad.d_sigma[i, j]), float(se[i, j])) for i in range(d) for j in range(d)]


def _row(cfg, param, rep, est, se, truth) -> ResultRow:
    rel = None
    if truth is not None and truth != 0:
        rel = (est - truth) / truth
    return ResultRow(cfg.method, cfg.model, param, rep, float(est), float(se), truth, rel)


def _oracle(cfg: ExperimentConfig):
    dep, sites = cfg.dependence, cfg.sites
    m1, m2 = cfg.margins
    return analytic_correlation(dep, sites, m1, m2), analytic_sensitivity(dep, sites, m1, m2)


def _replicate(cfg: ExperimentConfig, rep: int):
    dep, sites = cfg.dependence, cfg.sites
    m1, m2 = cfg.margins
    sc = cfg.sim_config()
    if cfg.method == "lrm":
        return lrm_estimate(dep, sites, m1, m2, sc, stream_id=rep)
    if cfg.method == "ipa":
        return ipa_estimate(dep, sites, m1, m2, sc, stream_id=rep)
    if isinstance(dep, BrParams):
        return fd_sensitivity_br(dep, sites, m1, m2, sc, step=cfg.fd_step, stream_id=rep)
    return fd_sensitivity_smith(dep, sites, m1, m2, sc, step=cfg.fd_step, stream_id=rep)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[ResultRow]:
    """Run every replicate and attach the exact values.

    Parameters
    ----------
    cfg : ExperimentConfig
    workers : int
        Threads over replicates.  The returned rows do not depend on it.
    """
    r_true, grad_true = _oracle(cfg)
    names = _param_names(cfg.dependence)
    truth = [v for v, _ in _flatten(cfg.dependence, grad_true, with_se=False)]
    if cfg.method == "oracle":
        rows = [_row(cfg, n, 0, t, 0.0, t) for n, t in zip(names, truth)]
        rows.append(_row(cfg, "R", 0, r_true, 0.0, r_true))
        return rows
    reps = range(cfg.n_replicates)
    if workers > 1 and cfg.n_replicates > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda r: _replicate(cfg, r), reps))
    else:
        results = [_replicate(cfg, r) for r in reps]
    rows = []
    for rep, res in zip(reps, results):
        for n, (v, se), t in zip(names, _flatten(cfg.dependence, res, with_se=True), truth):
            rows.append(_row(cfg, n, rep, v, se, t))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    f = float(v)
    return repr(f) if math.isfinite(f) else str(f)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.method, r.model, r.param] + [_fmt(getattr(r, k)) for k in CSV_HEADER[3:]])
    return buf.getvalue()


def emit_csv(rows, path) -> None:
    """Write rows as CSV; floats use the shortest round-trip representation."""
    text = rows_to_csv(rows)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def emit_json(rows, path) -> None:
    """Write rows as a JSON list of objects."""
    try:
        with open(path, "w") as fh:
            json.dump([asdict(r) for r in rows], fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
