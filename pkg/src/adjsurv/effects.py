"""Average treatment effects derived from adjusted curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm

from .adjust import AdjustedSurv
from .errors import CapabilityError, DomainError, RangeError
from .inference import percentile_interval, z_value
from .nonparam import StepFunction, step_eval, step_integrate


@dataclass(frozen=True)
class EffectEstimate:
    """One scalar summary: a difference, a quantile or an RMST.

    ``at`` is the time for ``diff``, the probability for ``quantile`` and
    tau for ``rmst``. A quantile that is never reached has ``estimate=None``.
    """

    kind: str
    group_a: str
    at: float
    estimate: Optional[float]
    group_b: Optional[str] = None
    se: Optional[float] = None
    ci_lower: Optional[float] = None
    ci_upper: Optional[float] = None
    p_value: Optional[float] = None
    se_source: Optional[str] = None

    @property
    def reached(self) -> bool:
        return self.estimate is not None


def _check_groups(adj: AdjustedSurv, *groups: str) -> None:
    for g in groups:
        if g not in adj.curves:
            raise DomainError(f"unknown group {g!r}", group=g, groups=list(adj.groups))


def _boot_at(adj: AdjustedSurv, group: str, t: np.ndarray) -> np.ndarray:
    """Replicate values at times ``t`` by step lookup on the bootstrap grid."""
    boot = adj.boot
    reps = boot.replicates[:, boot.group_index(group), :]
    pos = np.searchsorted(boot.eval_times, t, side="right") - 1
    out = np.where(pos[None, :] >= 0, reps[:, np.maximum(pos, 0)], 1.0)
    return out


def two_sided_p(estimate: float, se: float) -> float:
    if se > 0:
        return float(2 * norm.sf(abs(estimate) / se))
    return 1.0 if estimate == 0 else 0.0


def curve_diff(adj: AdjustedSurv, group_a: str, group_b: str, times=None,
               conf_level: Optional[float] = None) -> list[EffectEstimate]:
    """``S_a(t) - S_b(t)`` with a normal-theory test at each time.

    The standard error combines the two curves' standard errors (analytic if
    both curves carry them, bootstrap standard deviations otherwise).
    """
    _check_groups(adj, group_a, group_b)
    ca, cb = adj.curves[group_a], adj.curves[group_b]
    end = min(ca.support_end, cb.support_end)
    if times is None:
        t = adj.eval_times[adj.eval_times <= end]
    else:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        if np.any(t > end):
            raise RangeError("difference requested beyond a curve's support",
                             time=float(t.max()), support_end=end)
    conf_level = adj.conf_level if conf_level is None else conf_level
    z = z_value(conf_level)
    delta = np.atleast_1d(step_eval(ca.curve, t)) - np.atleast_1d(step_eval(cb.curve, t))

    if ca.se is not None and cb.se is not None:
        sa = np.atleast_1d(step_eval(StepFunction(ca.times, ca.se, 0.0), t))
        sb = np.atleast_1d(step_eval(StepFunction(cb.times, cb.se, 0.0), t))
        source = "analytic"
    elif adj.boot is not None:
        with np.errstate(all="ignore"):
            sa = np.nanstd(_boot_at(adj, group_a, t), axis=0, ddof=1)
            sb = np.nanstd(_boot_at(adj, group_b, t), axis=0, ddof=1)
        source = "bootstrap"
    else:
        raise CapabilityError("difference tests need standard errors: use conf_int=True "
                              "with a method that has them, or bootstrap=True")
    se = np.sqrt(sa ** 2 + sb ** 2)
    return [EffectEstimate("diff", group_a, float(ti), float(d), group_b, float(s),
                           float(d - z * s), float(d + z * s), two_sided_p(float(d), float(s)),
                           source)
            for ti, d, s in zip(t, delta, se)]


def _first_crossing(times: np.ndarray, values: np.ndarray, p: float) -> Optional[float]:
    hit = np.flatnonzero(values <= p)
    return float(times[hit[0]]) if hit.size else None


def surv_quantile(adj: AdjustedSurv, p: float, conf_level: Optional[float] = None,
                  groups: Optional[Sequence[str]] = None) -> list[EffectEstimate]:
    """First time each curve drops to ``p`` or below (``None`` if never).

    Intervals invert the point-wise bands when present, otherwise they are
    percentile intervals of the bootstrap replicate quantiles.
    """
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)", p=p)
    groups = adj.groups if groups is None else tuple(groups)
    _check_groups(adj, *groups)
    out = []
    for g in groups:
        c = adj.curves[g]
        q = _first_crossing(c.times, c.surv, p)
        lo = hi = None
        if conf_level is not None:
            if c.ci_lower is not None and c.ci_upper is not None:
                # the lower band reaches p first, so it bounds the quantile from below
                lo = _first_crossing(c.times, c.ci_lower, p)
                hi = _first_crossing(c.times, c.ci_upper, p)
            elif adj.boot is not None:
                reps = adj.boot.replicates[:, adj.boot.group_index(g), :]
                qs = np.array([_first_crossing(adj.boot.eval_times, np.nan_to_num(r, nan=np.inf), p)
                               or np.nan for r in reps], dtype=float)
                if np.any(np.isfinite(qs)):
                    lo_, hi_ = percentile_interval(qs, conf_level)
                    lo, hi = float(lo_), float(hi_)
        out.append(EffectEstimate("quantile", g, float(p), q, ci_lower=lo, ci_upper=hi))
    return out


def _rmst_replicates(adj: AdjustedSurv, group: str, tau: float) -> np.ndarray:
    """Area under each replicate step curve on [0, tau]; NaN where undefined."""
    boot = adj.boot
    grid = boot.eval_times
    reps = boot.replicates[:, boot.group_index(group), :]
    knots = np.concatenate([[0.0], grid[(grid > 0) & (grid < tau)], [tau]])
    pos = np.searchsorted(grid, knots[:-1], side="right") - 1
    heights = np.where(pos[None, :] >= 0, reps[:, np.maximum(pos, 0)], 1.0)
    return heights @ np.diff(knots)


def rmst(adj: AdjustedSurv, tau: float, groups: Optional[Sequence[str]] = None,
         conf_level: Optional[float] = None) -> list[EffectEstimate]:
    """Restricted mean survival time: the exact area under each curve on [0, tau].

    Intervals are percentile intervals over bootstrap replicates, when present.
    """
    if not tau > 0:
        raise DomainError("tau must be > 0", tau=tau)
    groups = adj.groups if groups is None else tuple(groups)
    _check_groups(adj, *groups)
    conf_level = adj.conf_level if conf_level is None else conf_level
    out = []
    for g in groups:
        est = step_integrate(adj.curves[g].curve, 0.0, tau)
        se = lo = hi = None
        if adj.boot is not None:
            vals = _rmst_replicates(adj, g, tau)
            vals = vals[np.isfinite(vals)]
            if vals.size > 1:
                se = float(np.std(vals, ddof=1))
                lo_, hi_ = percentile_interval(vals, conf_level)
                lo, hi = float(lo_), float(hi_)
        out.append(EffectEstimate("rmst", g, float(tau), est, se=se, ci_lower=lo, ci_upper=hi,
                                  se_source="bootstrap" if se is not None else None))
    return out


def rmst_diff(adj: AdjustedSurv, group_a: str, group_b: str, tau: float,
              conf_level: Optional[float] = None) -> EffectEstimate:
    """``RMST_a(tau) - RMST_b(tau)``; bootstrap interval from paired replicates."""
    _check_groups(adj, group_a, group_b)
    conf_level = adj.conf_level if conf_level is None else conf_level
    est = (step_integrate(adj.curves[group_a].curve, 0.0, tau)
           - step_integrate(adj.curves[group_b].curve, 0.0, tau))
    se = lo = hi = p = None
    if adj.boot is not None:
        d = _rmst_replicates(adj, group_a, tau) - _rmst_replicates(adj, group_b, tau)
        d = d[np.isfinite(d)]
        if d.size > 1:
            se = float(np.std(d, ddof=1))
            lo_, hi_ = percentile_interval(d, conf_level)
            lo, hi = float(lo_), float(hi_)
            p = two_sided_p(est, se)
    return EffectEstimate("rmst", group_a, float(tau), est, group_b, se, lo, hi, p,
                          "bootstrap" if se is not None else None)


def cif(values) -> np.ndarray:
    """Cumulative incidence display values ``1 - S``."""
    return 1.0 - np.asarray(values, dtype=float)
