import numpy as np
import pytest
from dataclasses import replace

from adjsurv import (DGPSpec, MethodSpec, StepFunction, SurvCurve, adjustedsurv, approx_ci,
                     bootstrap_curves, simulate_dgp, validate_dataset, weighted_km)
from adjsurv.errors import CapabilityError, ConfigurationError, InstabilityError
from adjsurv.inference import percentile_interval


@pytest.fixture(scope="module")
def sim():
    return simulate_dgp(DGPSpec(n=150), seed=5)


def test_approx_ci_arithmetic():
    sc = SurvCurve(StepFunction([1.0], [0.5]), se=np.array([0.1]))
    out = approx_ci(sc, 0.95)
    np.testing.assert_allclose([out.ci_lower[0], out.ci_upper[0]], [0.304, 0.696], atol=5e-4)


def test_approx_ci_zero_se_and_clamp():
    sc = SurvCurve(StepFunction([1.0, 2.0], [0.98, 0.02]), se=np.array([0.0, 0.2]))
    out = approx_ci(sc)
    assert out.ci_lower[0] == out.ci_upper[0] == 0.98
    assert out.ci_lower[1] == 0.0 and out.ci_upper[1] <= 1.0
    for transform in ("plain", "loglog"):
        o = approx_ci(sc, transform=transform)
        assert np.all(o.ci_lower <= o.surv) and np.all(o.surv <= o.ci_upper)


def test_approx_ci_needs_se():
    with pytest.raises(CapabilityError):
        approx_ci(SurvCurve(StepFunction([1.0], [0.5])), method="direct")


def test_greenwood_bands_toy():
    sc = weighted_km([1, 2, 3], [1, 0, 1])
    out = approx_ci(sc, 0.95)
    var = (2 / 3) ** 2 * (1 / (3 * 2))
    z = 1.959963984540054
    assert out.ci_lower[0] == pytest.approx(2 / 3 - z * np.sqrt(var), abs=1e-12)


def test_identical_rows_zero_sd():
    ds = validate_dataset({"time": [2.0] * 6 + [3.0] * 6, "event": [1] * 12,
                           "treatment": ["a"] * 6 + ["b"] * 6})
    adj = adjustedsurv(ds, MethodSpec("km"), bootstrap=True, n_boot=20, seed=1)
    sd = adj.boot.sd
    np.testing.assert_array_equal(sd[np.isfinite(sd)], 0.0)
    for c in adj.curves.values():
        np.testing.assert_array_equal(c.ci_lower, c.surv)
        np.testing.assert_array_equal(c.ci_upper, c.surv)


def test_bootstrap_deterministic_and_prefix(sim):
    spec = MethodSpec("iptw_km", "x")
    a = bootstrap_curves(sim, spec, n_boot=20, seed=42)
    b = bootstrap_curves(sim, spec, n_boot=20, seed=42)
    np.testing.assert_array_equal(a.replicates, b.replicates)
    np.testing.assert_array_equal(a.ci_lower, b.ci_lower)
    c = bootstrap_curves(sim, spec, n_boot=40, seed=42)
    np.testing.assert_array_equal(c.replicates[:20], a.replicates)


def test_bootstrap_workers_independent(sim):
    spec = MethodSpec("direct", outcome_formula="x")
    a = bootstrap_curves(sim, spec, n_boot=12, seed=3, workers=1)
    b = bootstrap_curves(sim, spec, n_boot=12, seed=3, workers=2)
    np.testing.assert_array_equal(a.replicates, b.replicates)


def test_percentile_contains_median(sim):
    boot = bootstrap_curves(sim, MethodSpec("km"), n_boot=30, seed=8)
    ok = np.isfinite(boot.replicates).all(axis=0)
    med = np.median(boot.replicates, axis=0)
    assert np.all(boot.ci_lower[ok] <= med[ok]) and np.all(med[ok] <= boot.ci_upper[ok])


def test_percentile_interval_ignores_nan():
    lo, hi = percentile_interval(np.array([[0.1], [np.nan], [0.3]]), 0.5)
    assert 0.1 <= lo[0] <= hi[0] <= 0.3


def test_bootstrap_failures_counted_and_fatal():
    # tiny groups: some resamples lose a treatment level
    ds = validate_dataset({"time": [1, 2, 3, 4, 5], "event": [1, 1, 1, 1, 1],
                           "treatment": ["a", "a", "a", "a", "b"]})
    with pytest.raises(InstabilityError) as err:
        bootstrap_curves(ds, MethodSpec("km"), n_boot=40, seed=0)
    assert err.value.context["failed_replicates"] > 0


def test_bootstrap_config_errors(sim):
    with pytest.raises(ConfigurationError):
        bootstrap_curves(sim, MethodSpec("km"), n_boot=1, seed=0)


def test_normal_bootstrap_interval(sim):
    adj = adjustedsurv(sim, MethodSpec("km"), bootstrap=True, n_boot=20, seed=2,
                       boot_ci="normal")
    c = adj[sim.levels[0]]
    assert np.all(c.ci_lower <= c.surv + 1e-15) and np.all(c.surv <= c.ci_upper + 1e-15)
