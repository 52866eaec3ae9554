"""Acceptance criteria, each at its stated tolerance.

Each test records one PASS/FAIL line, printed in the terminal summary.
Criteria 3 and 4 use 100 replicates of 1e5 draws and take several minutes.
"""
import time
from math import gamma as mgamma

import numpy as np
from scipy import stats

from maxsens.core import BrParams, SmithParams, frechet_to_gev, moment_c, moment_d
from maxsens.experiment import parse_config, rows_to_csv, run_experiment
from maxsens.gauss import RngStream
from maxsens.ipa import dlog_y_dsigma, ipa_from_batch
from maxsens.lrm import bivariate_density, log_bivariate_density, lrm_from_batch, score
from maxsens.mdensity import HrStructure, density_faa_di_bruno, mc_density_and_score
from maxsens.oracle import (
    analytic_correlation,
    analytic_sensitivity,
    extremal_coefficient,
    g_function,
    pair_h,
)
from maxsens.simulate import SimConfig, simulate_brown_resnick, simulate_smith

from conftest import ACCEPTANCE, BR, ORIGIN, SMITH, br_margins, smith_margins

N_REP = 100
S = 100_000


def _record(k, ok, detail):
    ACCEPTANCE.append((k, bool(ok), detail))
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


# printed reference values: (beta -> (d/dkappa, d/dpsi, normalised kappa, normalised psi, R))
TABLE_BR = {
    (1, 1): {2: (0.048, 0.131, 0.061, 0.167, 0.784), 3: (0.046, 0.126, 0.058, 0.158, 0.797)},
    (3, 2): {2: (0.074, -0.044, 0.122, -0.072, 0.610), 3: (0.074, -0.044, 0.117, -0.070, 0.626)},
    (9, 9): {2: (0.087, -0.439, 0.306, -1.552, 0.283), 3: (0.089, -0.452, 0.302, -1.529, 0.296)},
}
# (s11, s12, s22, normalised s11, s12, s22, R); None marks the two-decimal entries
TABLE_SMITH = {
    (1, 1): {2: (0.174, 0.06, 0.020, 0.242, 0.083, 0.029, 0.717),
             3: (0.170, 0.058, 0.020, 0.232, 0.080, 0.027, 0.732)},
    (3, 2): {2: (0.233, 0.05, 0.011, 1.669, 0.362, 0.078, 0.139),
             3: (0.243, 0.053, 0.011, 1.655, 0.359, 0.078, 0.147)},
}
TWO_DECIMAL = {((1, 1), 2, 1), ((3, 2), 2, 1)}


def test_criterion_1_oracle_brown_resnick():
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    for x2, by_beta in TABLE_BR.items():
        for beta, ref in by_beta.items():
            m = br_margins(beta)
            s = (ORIGIN, x2)
            r = analytic_correlation(BR, s, m, m)
            g = analytic_sensitivity(BR, s, m, m)
            got = (g.kappa, g.psi, g.kappa / r, g.psi / r, r)
            for a, b in zip(got, ref):
                worst = max(worst, abs(a - b))
                n += 1
    dt = time.perf_counter() - t0
    _record(1, worst <= 1e-3 and dt < 60, f"{n} values, max |error| {worst:.2e} (tol 1e-3), {dt:.1f} s")


def test_criterion_2_oracle_smith():
    t0 = time.perf_counter()
    excess, n = 0.0, 0
    for x2, by_beta in TABLE_SMITH.items():
        for beta, ref in by_beta.items():
            m = smith_margins(beta)
            s = (ORIGIN, x2)
            r = analytic_correlation(SMITH, s, m, m)
            d = analytic_sensitivity(SMITH, s, m, m).d_sigma
            got = (d[0, 0], d[0, 1], d[1, 1], d[0, 0] / r, d[0, 1] / r, d[1, 1] / r, r)
            for k, (a, b) in enumerate(zip(got, ref)):
                tol = 5e-3 if (x2, beta, k) in TWO_DECIMAL else 1e-3
                excess = max(excess, abs(a - b) / tol)
                n += 1
    dt = time.perf_counter() - t0
    _record(2, excess <= 1 and dt < 60, f"{n} values, max |error|/tol {excess:.2f}, {dt:.1f} s")


def test_criterion_3_lrm_accuracy():
    lines, ok = [], True
    for x2 in [(1, 1), (3, 2), (9, 9)]:
        s = (ORIGIN, x2)
        truth = {b: analytic_sensitivity(BR, s, br_margins(b), br_margins(b)) for b in (2, 3)}
        rel = {b: [] for b in (2, 3)}
        same = 0.0
        for r in range(N_REP):
            batch = simulate_brown_resnick(BR, s, SimConfig(S, seed=3), stream_id=r)
            for b in (2, 3):
                m = br_margins(b)
                est = lrm_from_batch(batch, BR, s, m, m, 3, r)
                rk = (est.kappa.value - truth[b].kappa) / truth[b].kappa
                rp = (est.psi.value - truth[b].psi) / truth[b].psi
                rel[b].append(abs(rk))
                same = max(same, abs(rk - rp))
        for b in (2, 3):
            med = float(np.median(rel[b]))
            ok &= med < 0.05
            lines.append(f"x2={x2} beta={b}: {100 * med:.1f}%")
        ok &= same < 1e-12
    _record(3, ok, "median |rel err| of dR/dkappa " + ", ".join(lines) + f"; max |rel_psi - rel_kappa| {same:.1e}")


def test_criterion_4_ipa_accuracy():
    lines, ok, ident = [], True, True
    entries = [(0, 0), (0, 1), (1, 1)]
    for x2 in [(1, 1), (3, 2)]:
        s = (ORIGIN, x2)
        truth = {b: analytic_sensitivity(SMITH, s, smith_margins(b), smith_margins(b)).d_sigma for b in (2, 3)}
        rel = {b: [] for b in (2, 3)}
        for r in range(N_REP):
            batch = simulate_smith(SMITH, s, SimConfig(S, seed=4), stream_id=r)
            for b in (2, 3):
                m = smith_margins(b)
                g = ipa_from_batch(batch, SMITH, s, m, m, 4, r)
                ident &= g.d_sigma[0, 1] == g.d_sigma[1, 0] and g.std_error[0, 1] == g.std_error[1, 0]
                rel[b].append([abs(g.d_sigma[e] / truth[b][e] - 1) for e in entries])
        for b in (2, 3):
            med = np.median(rel[b], axis=0)
            ok &= bool(np.all(med < 0.05))
            lines.append(f"x2={x2} beta={b}: " + "/".join(f"{100 * v:.1f}" for v in med) + "%")
    ok &= ident
    _record(4, ok, "median |rel err| s11/s12/s22 " + ", ".join(lines) + f"; s21 == s12 bitwise: {ident}")


def test_criterion_5_beta8_spot_check():
    m = br_margins(8)
    printed_r = {(1, 1): 0.840, (3, 2): 0.685, (9, 9): 0.345}
    ok, lines = True, []
    for k, (x2, pr) in enumerate(printed_r.items()):
        s = (ORIGIN, x2)
        r = analytic_correlation(BR, s, m, m)
        g = analytic_sensitivity(BR, s, m, m)
        batch = simulate_brown_resnick(BR, s, SimConfig(1_000_000, seed=5), stream_id=k)
        est = lrm_from_batch(batch, BR, s, m, m, 5, k)
        zk = (est.kappa.value - g.kappa) / est.kappa.std_error
        zp = (est.psi.value - g.psi) / est.psi.std_error
        ok &= abs(zk) < 3 and abs(zp) < 3 and abs(r - pr) <= 1e-3
        lines.append(f"x2={x2}: z_kappa {zk:+.2f} z_psi {zp:+.2f} R {r:.4f}")
    _record(5, ok, "; ".join(lines))


def _property_checks():
    out = {}
    gen = np.random.default_rng(6)

    fre = stats.invweibull(1.0)
    pv = []
    for dep, sim in ((BR, simulate_brown_resnick), (SMITH, simulate_smith)):
        y = sim(dep, (ORIGIN, (3, 2)), SimConfig(S, seed=6)).values
        pv += [stats.kstest(y[:, j], fre.cdf).pvalue for j in range(2)]
        z = 1.0 / y.max(axis=1)
        est = 1.0 / z.mean()
        se = z.std(ddof=1) / np.sqrt(len(z)) / z.mean() ** 2
        out[f"extremal coefficient {type(dep).__name__}"] = abs(est - extremal_coefficient(dep, (ORIGIN, (3, 2)))) < 3 * se
    out["Frechet margins (KS)"] = min(pv) > 1e-3

    worst = 0.0
    for _ in range(200):
        p = BrParams(kappa=gen.uniform(0.5, 5), psi=gen.uniform(0.2, 1.8))
        b = tuple(gen.uniform(-4, 4, 2))
        y = np.exp(gen.normal(0.3, 1.2, 2))
        sc = score(y, p, ORIGIN, b)
        e = 1e-6 * p.kappa
        fd = (log_bivariate_density(y, pair_h(BrParams(p.kappa + e, p.psi), (ORIGIN, b)))
              - log_bivariate_density(y, pair_h(BrParams(p.kappa - e, p.psi), (ORIGIN, b)))) / (2 * e)
        worst = max(worst, abs(sc.d_kappa - fd) / max(abs(fd), 1e-3))
    out["lrm score vs FD"] = worst < 1e-6

    worst = 0.0
    for _ in range(200):
        a = gen.normal(size=(2, 2))
        sig = a @ a.T + 0.3 * np.eye(2)
        x, c, u = gen.normal(0, 2, 2), gen.normal(0, 2, 2), gen.uniform(0.1, 10)

        def logy(sg):
            d = x - c
            return np.log(u) - 0.5 * d @ np.linalg.solve(sg, d) - np.log(2 * np.pi) - 0.5 * np.log(np.linalg.det(sg))

        g = dlog_y_dsigma(x, c, SmithParams(sig)).d_sigma
        for i in range(2):
            for j in range(2):
                e = np.zeros((2, 2))
                e[i, j] = 1e-6
                fd = (logy(sig + e) - logy(sig - e)) / 2e-6
                worst = max(worst, abs(g[i, j] - fd) / max(abs(fd), 1e-2))
    out["ipa pathwise derivative vs FD"] = worst < 1e-5

    hr2 = HrStructure(BR, (ORIGIN, (1, 1)))
    worst = 0.0
    for _ in range(50):
        y = np.exp(gen.normal(0, 1, 2))
        ref = bivariate_density(y, pair_h(BR, (ORIGIN, (1, 1))))
        worst = max(worst, abs(density_faa_di_bruno(y, hr2) / ref - 1))
    out["pair density = bivariate density"] = worst < 1e-10
    hr3 = HrStructure(BR, (ORIGIN, (1, 1), (3, 2)))
    y3 = np.array([0.8, 1.7, 2.5])
    d = np.array([mc_density_and_score(y3, hr3, n_gibbs=400, rng=RngStream(10, r)).density for r in range(10)])
    out["Gibbs density vs enumeration"] = abs(d.mean() - density_faa_di_bruno(y3, hr3)) < 3 * d.std(ddof=1) / np.sqrt(10)

    ok = True
    for beta in (2, 3, 8):
        m = br_margins(beta)
        g = np.random.default_rng(beta)
        x = np.concatenate([frechet_to_gev(1.0 / g.standard_exponential(1_000_000), m) ** beta for _ in range(10)])
        se_m = x.std() / np.sqrt(len(x))
        v = ((x - x.mean()) ** 2)
        ok &= abs(x.mean() - moment_c(m)) < 4 * se_m
        ok &= abs(v.mean() - moment_d(m)) < 4 * v.std() / np.sqrt(len(x))
    out["moments vs 1e7 draws"] = bool(ok)

    out["g limits"] = (
        g_function(0.0, 0.0, 0.0) == 1.0
        and abs(g_function(-0.3, -0.2, 0.0) / mgamma(1.5) - 1) < 1e-14
        and abs(g_function(-0.3, -0.2, 50.0) - mgamma(1.3) * mgamma(1.2)) < 1e-4
    )

    cfg = parse_config({
        "model": "smith", "method": "ipa", "dependence": {"sigma": SMITH.sigma.tolist()},
        "sites": [[0, 0], [3, 2]], "margins": {"eta": 26.12, "tau": 2.92, "xi": -0.10, "beta": 2},
        "n_sims": 5000, "n_replicates": 8, "seed": 7, "block_size": 1000,
    })
    texts = {rows_to_csv(run_experiment(cfg, workers=w)) for w in (1, 4, 8)}
    out["byte-identical under 1/4/8 workers"] = len(texts) == 1
    return out


def test_criterion_6_property_suite():
    checks = _property_checks()
    failed = [k for k, v in checks.items() if not v]
    _record(6, not failed, f"{len(checks) - len(failed)}/{len(checks)} checks" + (f"; failed: {failed}" if failed else ""))
