import numpy as np
import pytest
from hypothesis import given, strategies as st

from adjsurv import (DGPSpec, MethodSpec, StepFunction, SurvCurve, adjustedsurv, cif,
                     curve_diff, rmst, rmst_diff, simulate_dgp, step_eval, step_integrate,
                     surv_quantile)
from adjsurv.adjust import AdjustedSurv
from adjsurv.errors import CapabilityError, DomainError, RangeError
from adjsurv.effects import two_sided_p


def make_adj(curves, se=None):
    out = {}
    grid = sorted({0.0} | {t for times, _ in curves.values() for t in times})
    for g, (times, values) in curves.items():
        end = max(times) if times else 1.0
        s = None if se is None else np.asarray(se[g], float)
        out[g] = SurvCurve(StepFunction(times, values, 1.0, float(end)), group=g, se=s)
    return AdjustedSurv(out, MethodSpec("km"), np.asarray(grid))


@pytest.fixture(scope="module")
def sim_adj():
    sim = simulate_dgp(DGPSpec(n=200), seed=9)
    return adjustedsurv(sim, MethodSpec("km"), conf_int=True)


def test_diff_arithmetic():
    adj = make_adj({"a": ([1.0], [0.8]), "b": ([1.0], [0.7])}, se={"a": [0.03], "b": [0.04]})
    (e,) = curve_diff(adj, "a", "b", times=[1.0])
    assert e.estimate == pytest.approx(0.1) and e.se == pytest.approx(0.05)
    assert e.p_value == pytest.approx(two_sided_p(0.1, 0.05))
    assert e.p_value == pytest.approx(2 * (1 - 0.9772498680518208), rel=1e-9)
    assert e.se_source == "analytic"


def test_diff_self_and_antisymmetry(sim_adj):
    a, b = sim_adj.groups
    for e in curve_diff(sim_adj, a, a):
        assert e.estimate == 0
        if e.se > 0:
            assert e.p_value == 1.0
    ab, ba = curve_diff(sim_adj, a, b), curve_diff(sim_adj, b, a)
    for x, y in zip(ab, ba):
        assert x.estimate == -y.estimate
    t = ab[5].at
    assert ab[5].estimate == step_eval(sim_adj[a].curve, t) - step_eval(sim_adj[b].curve, t)
    for e in ab:
        assert e.ci_lower <= e.estimate <= e.ci_upper and 0 <= e.p_value <= 1


def test_diff_errors():
    adj = make_adj({"a": ([1.0], [0.8]), "b": ([2.0], [0.7])})
    with pytest.raises(CapabilityError):
        curve_diff(adj, "a", "b", times=[1.0])
    adj = make_adj({"a": ([1.0], [0.8]), "b": ([2.0], [0.7])}, se={"a": [0.1], "b": [0.1]})
    with pytest.raises(RangeError):
        curve_diff(adj, "a", "b", times=[1.5])


def test_diff_bootstrap_source():
    sim = simulate_dgp(DGPSpec(n=150), seed=1)
    adj = adjustedsurv(sim, MethodSpec("direct", outcome_formula="x"), bootstrap=True,
                       n_boot=20, seed=4)
    es = curve_diff(adj, "1", "0", times=[3.0])
    assert es[0].se_source == "bootstrap" and es[0].se > 0


def test_quantile_examples():
    adj = make_adj({"a": ([3.0], [0.4]), "b": ([3.0], [0.6])})
    qa, qb = surv_quantile(adj, 0.5)
    assert qa.estimate == 3.0 and qa.reached
    assert qb.estimate is None and not qb.reached
    with pytest.raises(DomainError):
        surv_quantile(adj, 1.0)


def test_quantile_band_inversion(sim_adj):
    for e in surv_quantile(sim_adj, 0.5, conf_level=0.95):
        if e.ci_lower is not None and e.ci_upper is not None:
            assert e.ci_lower <= e.estimate <= e.ci_upper


step_curves = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=15).map(
    lambda v: (np.arange(1, len(v) + 1, dtype=float), np.sort(np.asarray(v))[::-1]))


@given(step_curves, st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_quantile_monotone_in_p(curve, p1, p2):
    adj = make_adj({"a": (list(curve[0]), list(curve[1]))})
    lo, hi = sorted((p1, p2))
    q1 = surv_quantile(adj, lo)[0].estimate
    q2 = surv_quantile(adj, hi)[0].estimate
    if q1 is not None:
        assert q2 is not None and q1 >= q2


@given(step_curves, st.floats(0.01, 0.99))
def test_quantile_grid_invariance(curve, p):
    times, values = curve
    base = make_adj({"a": (list(times), list(values))})
    # duplicate the step at midpoints: same function, finer grid
    mid = times - 0.5
    mid = mid[mid > 0]
    t2 = np.sort(np.concatenate([times, mid]))
    v2 = np.asarray(StepFunction(times, values)(t2))
    fine = make_adj({"a": (list(t2), list(v2))})
    assert surv_quantile(base, p)[0].estimate == surv_quantile(fine, p)[0].estimate


def test_rmst_examples():
    adj = make_adj({"a": ([1.0, 2.0], [0.5, 0.0]), "b": ([3.0], [1.0])})
    ra, rb = rmst(adj, 2.0)
    assert ra.estimate == 1.5 and rb.estimate == 2.0
    with pytest.raises(RangeError):
        rmst(adj, 3.5)
    d = rmst_diff(adj, "a", "b", 2.0)
    diff_curve = StepFunction([1.0, 2.0], [-0.5, -1.0], 0.0)
    assert d.estimate == pytest.approx(step_integrate(diff_curve, 0.0, 2.0))


@given(st.floats(0.1, 5), st.floats(0.1, 5))
def test_rmst_additive_monotone(t1, t2):
    f = StepFunction([1.0, 2.0, 4.0], [0.7, 0.4, 0.1], 1.0, 11.0)
    lo, hi = sorted((t1, t2))
    assert step_integrate(f, 0, lo) <= step_integrate(f, 0, hi)
    assert step_integrate(f, 0, lo) + step_integrate(f, lo, hi) == pytest.approx(
        step_integrate(f, 0, hi), abs=1e-12)


def test_rmst_bootstrap_ci():
    sim = simulate_dgp(DGPSpec(n=200), seed=2)
    adj = adjustedsurv(sim, MethodSpec("iptw_km", "x"), bootstrap=True, n_boot=30, seed=6)
    for e in rmst(adj, 5.0):
        assert e.ci_lower <= e.estimate <= e.ci_upper and e.se > 0
    d = rmst_diff(adj, "1", "0", 5.0)
    assert d.ci_lower <= d.estimate <= d.ci_upper


def test_cif_transform():
    s = np.array([1.0, 0.7, 0.2])
    np.testing.assert_array_equal(cif(s) + s, 1.0)
