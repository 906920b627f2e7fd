"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import itertools
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from adjsurv import (DGPSpec, MethodSpec, StepFunction, SurvCurve, adjustedsurv, curve_diff,
                     pseudo_values, rmst, simulate_dgp, surv_quantile, true_curve,
                     true_quantile, validate_dataset, weighted_km)
from adjsurv.adjust import AdjustedSurv
from adjsurv.models import (cox_partial_loglik, cox_score, fit_cox, logistic_loglik,
                            logistic_score)
from adjsurv.nonparam import pava_nonincreasing

from conftest import ACCEPTANCE

DGP = DGPSpec(n=2000)
MEDIANS = (true_quantile(DGP, 0), true_quantile(DGP, 1))


def report(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    ACCEPTANCE.append(line)
    assert passed, line


def mc_bias(specs: dict, reps: int, n: int = 2000, seed0: int = 10_000) -> dict:
    """Per-spec absolute Monte-Carlo bias at each group's true median."""
    spec = DGPSpec(n=n)
    meds = [true_quantile(spec, z) for z in (0, 1)]
    err = {k: np.empty((reps, 2)) for k in specs}
    for r in range(reps):
        ds = simulate_dgp(spec, seed0 + r)
        for k, ms in specs.items():
            m = adjustedsurv(ds, ms, times=meds).surv_matrix()
            err[k][r] = [m[0, 0] - 0.5, m[1, 1] - 0.5]
    return {k: np.abs(e.mean(axis=0)) for k, e in err.items()}


# 1 -----------------------------------------------------------------------

def test_criterion_1_exact_degeneracies():
    rng = np.random.default_rng(1)
    failures = []
    worst = 0.0
    for i in range(50):
        t0 = time.perf_counter()
        n = int(rng.integers(4, 51))
        table = {"time": rng.integers(1, 10, n).astype(float), "event": rng.binomial(1, 0.7, n),
                 "treatment": np.where(np.arange(n) % 2 == 0, "a", "b"),
                 "x": rng.normal(size=n), "s": np.ones(n)}
        table["event"][:2] = 1
        ds = validate_dataset(table)
        km = adjustedsurv(ds, MethodSpec("km")).surv_matrix()
        iw = adjustedsurv(ds, MethodSpec("iptw_km", "x", options={"weights": np.ones(n)}))
        if not np.array_equal(km, iw.surv_matrix(), equal_nan=True):
            failures.append(f"iptw_km#{i}")
        for m in ("strat_cupples", "strat_nieto", "strat_amato"):
            st = adjustedsurv(ds, MethodSpec(m, strata=("s",))).surv_matrix()
            if not np.array_equal(km, st, equal_nan=True):
                failures.append(f"{m}#{i}")
        t = ds.time
        grid = np.unique(np.concatenate([t, t + 0.5]))
        grid = grid[grid <= t.max()]
        pv = pseudo_values(t, np.ones(n, dtype=int), grid)
        if not np.array_equal(pv, (t[:, None] > grid[None, :]).astype(float)):
            failures.append(f"pseudo#{i}")
        w = rng.integers(1, 4, n)
        a = weighted_km(t, ds.event, w.astype(float), variance="none")
        b = weighted_km(np.repeat(t, w), np.repeat(ds.event, w), variance="none")
        if not (np.array_equal(a.times, b.times) and np.array_equal(a.surv, b.surv)):
            failures.append(f"duplication#{i}")
        worst = max(worst, time.perf_counter() - t0)
    report(1, not failures and worst < 1.0,
           f"50 datasets, mismatches={failures[:5]}, slowest dataset {worst:.3f}s")


# 2 -----------------------------------------------------------------------

def naive_km(time, event, weight, t):
    s = 1.0
    for u in np.unique(time[event == 1]):
        if u <= t:
            s *= 1 - weight[(time == u) & (event == 1)].sum() / weight[time >= u].sum()
    return s


def test_criterion_2_hand_oracles():
    errs = {}
    # KM and Greenwood: events at 1, 3, 3, 5; censored at 2, 4, 6
    time_ = np.array([1, 2, 3, 3, 4, 5, 6.0])
    event = np.array([1, 0, 1, 1, 0, 1, 0])
    c = weighted_km(time_, event)
    hand_s = [6 / 7, 6 / 7 * 3 / 5, 6 / 7 * 3 / 5 * 1 / 2]
    hand_v = [hand_s[0] ** 2 * (1 / (7 * 6)),
              hand_s[1] ** 2 * (1 / (7 * 6) + 2 / (5 * 3)),
              hand_s[2] ** 2 * (1 / (7 * 6) + 2 / (5 * 3) + 1 / (2 * 1))]
    errs["km"] = np.max(np.abs(c.surv - hand_s))
    errs["greenwood"] = np.max(np.abs(c.se ** 2 - hand_v))
    # Amato: subject weights (n_s / n) / (n_sz / n_z) in a product-limit per group
    ds = validate_dataset({"time": [1, 2, 3, 4, 2, 5, 1, 3, 4, 6, 2, 7],
                           "event": [1, 0, 1, 1, 1, 1, 1, 0, 1, 1, 1, 0],
                           "treatment": ["a"] * 6 + ["b"] * 6,
                           "s": ["u", "u", "u", "v", "v", "v", "u", "v", "v", "v", "v", "u"]})
    adj = adjustedsurv(ds, MethodSpec("strat_amato", strata=("s",)))
    s = np.asarray(ds.covariates["s"])
    worst = 0.0
    for lev in ("a", "b"):
        m = ds.treatment == lev
        w = np.array([np.mean(s == x) / np.mean(s[m] == x) for x in s[m]])
        for u in np.unique(ds.time[m]):
            worst = max(worst, abs(adj[lev].curve(u) - naive_km(ds.time[m], ds.event[m], w, u)))
    errs["amato"] = worst
    # randomized cancellation: pi = 0.5 and constant outcome predictions
    t = np.arange(1, 9, dtype=float)
    rnd = validate_dataset({"time": t, "event": [1] * 8, "treatment": ["a", "b"] * 4,
                            "x": [0, 1, 1, 0, 0, 1, 1, 0]})
    grid = [0.0, 2.5, 4.5, 6.5]
    adj = adjustedsurv(rnd, MethodSpec("aiptw", "1", "1"), times=grid)
    worst = 0.0
    for lev in ("a", "b"):
        z = rnd.treatment == lev
        iptw_term = [np.sum(z * (t > g) / 0.5) / 8 for g in grid]
        worst = max(worst, np.max(np.abs(adj[lev].surv - iptw_term)))
    errs["aiptw_cancel"] = worst
    report(2, max(errs.values()) <= 1e-12,
           ", ".join(f"{k} err={v:.1e}" for k, v in errs.items()))


# 3 -----------------------------------------------------------------------

ADJUSTED = {
    "direct": MethodSpec("direct", outcome_formula="x"),
    "iptw_km": MethodSpec("iptw_km", "x"),
    "iptw_cox": MethodSpec("iptw_cox", "x"),
    "iptw_pseudo": MethodSpec("iptw_pseudo", "x"),
    "direct_pseudo": MethodSpec("direct_pseudo", outcome_formula="x"),
    "aiptw": MethodSpec("aiptw", "x", "x"),
    "aiptw_pseudo": MethodSpec("aiptw_pseudo", "x", "x"),
    "strat_cupples": MethodSpec("strat_cupples", strata=("x",)),
    "strat_nieto": MethodSpec("strat_nieto", strata=("x",)),
    "strat_amato": MethodSpec("strat_amato", strata=("x",)),
}


@pytest.mark.slow
def test_criterion_3_confounding_removal():
    bias = mc_bias({**ADJUSTED, "km": MethodSpec("km")}, reps=200)
    adjusted_ok = all(bias[k].max() < 0.02 for k in ADJUSTED)
    crude_ok = bias["km"].max() > 0.05
    detail = ", ".join(f"{k}={bias[k].max():.4f}" for k in bias)
    report(3, adjusted_ok and crude_ok, f"max group bias: {detail}")


# 4 -----------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_4_double_robustness():
    specs = {
        "aiptw|ps=1": MethodSpec("aiptw", "1", "x"),
        "aiptw_pseudo|ps=1": MethodSpec("aiptw_pseudo", "1", "x"),
        "iptw_km|ps=1": MethodSpec("iptw_km", "1"),
        "aiptw|out=1": MethodSpec("aiptw", "x", "1"),
        "aiptw_pseudo|out=1": MethodSpec("aiptw_pseudo", "x", "1"),
        "direct|out=1": MethodSpec("direct", outcome_formula="1"),
    }
    bias = mc_bias(specs, reps=200, seed0=20_000)
    ok = (all(bias[k].max() < 0.02 for k in specs if k.startswith("aiptw"))
          and bias["iptw_km|ps=1"].max() > 0.05 and bias["direct|out=1"].max() > 0.05)
    report(4, ok, ", ".join(f"{k}={v.max():.4f}" for k, v in bias.items()))


# 5 -----------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_5_post_estimation_correction():
    spec = DGPSpec(n=300)
    ms = MethodSpec("aiptw_pseudo", "x", "x")
    valid = violated = 0
    sse_raw = sse_cor = 0.0
    for r in range(100):
        ds = simulate_dgp(spec, 30_000 + r)
        raw = adjustedsurv(ds, ms)
        cor = adjustedsurv(ds, ms, force_bounds=True, iso_reg=True)
        violated += raw.raw_violations
        ok = True
        for i, lev in enumerate(ds.levels):
            truth = true_curve(spec, int(lev), raw.eval_times)
            a, b = raw.surv_matrix()[i], cor.surv_matrix()[i]
            keep = np.isfinite(a)
            sse_raw += np.sum((a[keep] - truth[keep]) ** 2)
            sse_cor += np.sum((b[keep] - truth[keep]) ** 2)
            v = b[keep]
            ok &= bool(np.all((v >= 0) & (v <= 1)) and np.all(np.diff(v) <= 0))
        valid += ok
    report(5, valid == 100 and sse_cor <= sse_raw,
           f"valid after correction {valid}/100, raw violations {violated}/100, "
           f"SSE raw {sse_raw:.5f} vs corrected {sse_cor:.5f}")


# 6 -----------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_bootstrap_coverage():
    spec = DGPSpec(n=500)
    meds = [true_quantile(spec, z) for z in (0, 1)]
    hits = np.zeros(2)
    reps = 200
    for r in range(reps):
        ds = simulate_dgp(spec, 40_000 + r)
        adj = adjustedsurv(ds, MethodSpec("iptw_km", "x"), times=meds, bootstrap=True,
                           n_boot=200, seed=50_000 + r)
        for i, lev in enumerate(ds.levels):
            lo, hi = adj.boot.ci_lower[i, i], adj.boot.ci_upper[i, i]
            hits[i] += lo <= 0.5 <= hi
    cov = hits / reps
    report(6, bool(np.all((cov >= 0.90) & (cov <= 0.98))),
           f"coverage z=0 {cov[0]:.3f}, z=1 {cov[1]:.3f}")


# 7 -----------------------------------------------------------------------

def _adj(curves: dict) -> AdjustedSurv:
    out = {g: SurvCurve(StepFunction(t, v, 1.0, float(max(t))), group=g)
           for g, (t, v) in curves.items()}
    grid = np.unique(np.concatenate([[0.0]] + [np.asarray(t, float) for t, _ in curves.values()]))
    return AdjustedSurv(out, MethodSpec("km"), grid)


def test_criterion_7_effects():
    toy = rmst(_adj({"a": ([1.0, 2.0], [0.5, 0.0])}), 2.0)[0].estimate
    rng = np.random.default_rng(7)
    mono_fail = 0
    for _ in range(1000):
        k = int(rng.integers(1, 12))
        curve = _adj({"a": (np.cumsum(rng.uniform(0.1, 2, k)), np.sort(rng.uniform(0, 1, k))[::-1])})
        p1, p2 = np.sort(rng.uniform(0.01, 0.99, 2))
        q1, q2 = surv_quantile(curve, p1)[0].estimate, surv_quantile(curve, p2)[0].estimate
        if q1 is not None and (q2 is None or q1 < q2):
            mono_fail += 1
    sim = simulate_dgp(DGPSpec(n=300), 1)
    adj = adjustedsurv(sim, MethodSpec("iptw_km", "x"), conf_int=True)
    ab, ba = curve_diff(adj, "0", "1"), curve_diff(adj, "1", "0")
    anti = all(x.estimate == -y.estimate and x.se == y.se for x, y in zip(ab, ba))
    report(7, toy == 1.5 and mono_fail == 0 and anti,
           f"toy RMST={toy}, quantile monotonicity failures={mono_fail}/1000, "
           f"antisymmetry exact={anti}")


# 8 -----------------------------------------------------------------------

def _fd(f, x, h=1e-5):
    eye = np.eye(len(x)) * h
    return np.array([(f(x + e) - f(x - e)) / (2 * h) for e in eye])


def _pava_oracle(values):
    """Exhaustive search over contiguous block partitions with block means."""
    n = len(values)
    best = np.inf
    best_fit = None
    for cuts in itertools.product([0, 1], repeat=n - 1):
        bounds = [0] + [i + 1 for i, c in enumerate(cuts) if c] + [n]
        fit = np.concatenate([np.full(b - a, values[a:b].mean())
                              for a, b in zip(bounds[:-1], bounds[1:])])
        if np.all(np.diff(fit) <= 1e-12):
            err = np.sum((fit - values) ** 2)
            if err < best - 1e-12:
                best, best_fit = err, fit
    return best_fit


def test_criterion_8_numerical_core():
    rng = np.random.default_rng(8)
    worst_log = worst_cox = 0.0
    for _ in range(20):
        n, p = 30, 3
        X = np.column_stack([np.ones(n), rng.normal(size=(n, p - 1))])
        y = rng.binomial(1, 0.5, n).astype(float)
        w = rng.uniform(0.5, 2, n)
        b = rng.normal(scale=0.5, size=p)
        g = logistic_score(b, X, y, w)
        fd = _fd(lambda v: logistic_loglik(v, X, y, w), b)
        worst_log = max(worst_log, np.linalg.norm(g - fd) / np.linalg.norm(fd))
        Xc = rng.normal(size=(n, 2))
        t = rng.integers(1, 10, n).astype(float)
        e = rng.binomial(1, 0.7, n)
        bc = rng.normal(scale=0.5, size=2)
        g = cox_score(bc, Xc, t, e, w)
        fd = _fd(lambda v: cox_partial_loglik(v, Xc, t, e, w), bc)
        worst_cox = max(worst_cox, np.linalg.norm(g - fd) / np.linalg.norm(fd))
    t = rng.integers(1, 12, 60).astype(float)
    e = rng.binomial(1, 0.6, 60)
    base = fit_cox(np.zeros((60, 0)), t, e).baseline_cumhaz
    na = np.cumsum([np.sum((t == u) & (e == 1)) / np.sum(t >= u) for u in np.unique(t[e == 1])])
    na_err = float(np.max(np.abs(base.values - na)))
    pava_fail = 0
    checked = 0
    for length in range(1, 7):
        for seq in itertools.product(range(4), repeat=length):
            v = np.asarray(seq, dtype=float)
            checked += 1
            if not np.allclose(pava_nonincreasing(v), _pava_oracle(v), rtol=0, atol=1e-12):
                pava_fail += 1
    ok = worst_log < 1e-6 and worst_cox < 1e-6 and na_err <= 1e-12 and pava_fail == 0
    report(8, ok, f"logistic grad rel err {worst_log:.1e}, Cox grad rel err {worst_cox:.1e}, "
                  f"Breslow vs Nelson-Aalen {na_err:.1e}, PAVA mismatches {pava_fail}/{checked}")


# 9 -----------------------------------------------------------------------

def test_criterion_9_cli_golden(tmp_path):
    here = Path(__file__).parent
    invocations = {
        "estimate": ["estimate", "toy.csv", "--method", "km", "--conf-int", "--svg-ci",
                     "--svg-median-lines", "--svg-censor-ticks"],
        "diff": ["diff", "toy.csv", "--method", "km", "--conf-int", "--group-a", "B",
                 "--group-b", "A", "--svg-ci"],
        "rmst": ["rmst", "toy.csv", "--method", "km", "--tau", "2"],
    }
    mismatched = []
    for locale in ("C", "de_DE.UTF-8"):
        for name, args in invocations.items():
            out = tmp_path / locale / name
            out.mkdir(parents=True)
            argv = args + ["--out-csv", str(out / f"{name}.csv"),
                           "--out-json", str(out / f"{name}.json")]
            if name != "rmst":
                argv += ["--out-svg", str(out / f"{name}.svg")]
            env = {**os.environ, "LC_ALL": locale, "LANG": locale}
            proc = subprocess.run([sys.executable, "-m", "adjsurv.cli", *argv],
                                  cwd=here / "data", env=env, capture_output=True)
            assert proc.returncode == 0, proc.stderr
            for f in out.iterdir():
                if f.read_bytes() != (here / "golden" / f.name).read_bytes():
                    mismatched.append(f"{locale}/{f.name}")
    report(9, not mismatched, f"8 artifacts x 2 locales, mismatches={mismatched}")
