"""Step functions, (weighted) Kaplan-Meier, pseudo-values and curve corrections."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _backend
from .errors import DegenerateInputError, DomainError, RangeError


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous piecewise-constant function on ``[0, inf)``.

    ``value(t) = values[j]`` for ``times[j] <= t < times[j+1]`` and
    ``value_before_first`` for ``t < times[0]``. ``support_end``, when set,
    is the last time at which the function is estimable; integration past
    it is refused.
    """

    times: np.ndarray
    values: np.ndarray
    value_before_first: float = 1.0
    support_end: Optional[float] = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise DomainError("times and values must be 1-d of equal length")
        if np.any(np.diff(times) <= 0):
            raise DomainError("step times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __call__(self, t):
        return step_eval(self, t)

    def __len__(self) -> int:
        return len(self.times)


def step_eval(f: StepFunction, t):
    """Evaluate ``f`` at ``t`` (scalar or array) with right-continuity."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("step functions are defined for t >= 0", t=float(np.min(arr)))
    idx = np.searchsorted(f.times, arr, side="right") - 1
    vals = np.concatenate([[f.value_before_first], f.values])
    out = vals[idx + 1]
    return float(out) if out.ndim == 0 else out


def step_integrate(f: StepFunction, start: float, stop: float) -> float:
    """Exact integral of ``f`` over ``[start, stop]``."""
    if start < 0 or stop < start:
        raise DomainError("need 0 <= start <= stop", start=start, stop=stop)
    if f.support_end is not None and stop > f.support_end:
        raise RangeError(f"cannot integrate to {stop!r}: curve is only estimable up to "
                         f"{f.support_end!r}", stop=stop, support_end=f.support_end)
    inner = f.times[(f.times > start) & (f.times < stop)]
    knots = np.concatenate([[start], inner, [stop]])
    heights = np.atleast_1d(step_eval(f, knots[:-1]))
    return float(np.sum(np.diff(knots) * heights))


@dataclass(frozen=True, eq=False)
class SurvCurve:
    """A single estimated survival curve.

    ``se``, ``ci_lower``, ``ci_upper``, ``n_risk`` and ``n_event`` are
    optional arrays aligned with ``curve.times``.
    """

    curve: StepFunction
    group: Optional[str] = None
    se: Optional[np.ndarray] = None
    ci_lower: Optional[np.ndarray] = None
    ci_upper: Optional[np.ndarray] = None
    n_risk: Optional[np.ndarray] = None
    n_event: Optional[np.ndarray] = None

    @property
    def times(self) -> np.ndarray:
        return self.curve.times

    @property
    def surv(self) -> np.ndarray:
        return self.curve.values

    @property
    def support_end(self) -> Optional[float]:
        return self.curve.support_end

    def with_values(self, values: np.ndarray, **changes) -> "SurvCurve":
        return replace(self, curve=replace(self.curve, values=np.asarray(values, float)), **changes)


def _event_counts(time: np.ndarray, event: np.ndarray, weight: np.ndarray):
    """Distinct times with weighted risk-set size, events and sum of squared weights."""
    order = np.argsort(time, kind="stable")
    t = time[order]
    e = event[order].astype(float)
    w = weight[order]
    uniq, first = np.unique(t, return_index=True)
    dw = np.add.reduceat(w * e, first)
    # Y at t_j = weight of subjects with T >= t_j
    tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    tail2 = np.concatenate([np.cumsum((w * w)[::-1])[::-1], [0.0]])
    yw = tail[first]
    yw2 = tail2[first]
    return uniq, yw, dw, yw2


def weighted_km(time, event, weight=None, variance: str = "auto",
                group: Optional[str] = None) -> SurvCurve:
    """Product-limit estimate with optional subject weights.

    With unit weights this is the ordinary Kaplan-Meier estimator. Variances:
    ``greenwood`` (``S^2 sum d / (Y (Y - d))``), ``xie_liu`` (the weighted
    analogue with effective risk-set size ``(sum w)^2 / sum w^2``), ``none``,
    or ``auto`` (Greenwood for unit weights, Xie-Liu otherwise).

    The returned curve jumps only at times with a positive weighted event
    count; its ``support_end`` is the largest time with positive weight.
    """
    time = np.asarray(time, dtype=float)
    event = np.asarray(event)
    if weight is None:
        weight = np.ones_like(time)
    weight = np.asarray(weight, dtype=float)
    if weight.shape != time.shape or event.shape != time.shape:
        raise DomainError("time, event and weight must have equal length")
    if np.any(weight < 0) or not np.all(np.isfinite(weight)):
        raise DomainError("weights must be finite and >= 0")
    if time.size == 0 or not np.any(weight > 0):
        raise DegenerateInputError("all weights are zero")

    uniq, yw, dw, yw2 = _event_counts(time, event, weight)
    keep = dw > 0
    t, y, d, y2 = uniq[keep], yw[keep], dw[keep], yw2[keep]
    surv = np.cumprod(1.0 - d / y)
    support_end = float(time[weight > 0].max())

    if variance == "auto":
        variance = "greenwood" if np.all(weight == 1.0) else "xie_liu"
    se = None
    if variance != "none":
        if variance == "greenwood":
            size = y
        elif variance == "xie_liu":
            # effective number at risk
            size = y * y / y2
        else:
            raise DomainError(f"unknown variance {variance!r}")
        gap = y - d
        terms = np.where(gap > 0, d / np.where(gap > 0, size * gap, 1.0), 0.0)
        var = np.where(surv > 0, surv ** 2 * np.cumsum(terms), 0.0)
        se = np.sqrt(var)

    return SurvCurve(curve=StepFunction(t, surv, 1.0, support_end), group=group,
                     se=se, n_risk=y, n_event=d)


def censoring_km(time, event) -> StepFunction:
    """KM of the censoring distribution, ``G(t) = P(C > t)``.

    Events at a tied time are taken to precede censorings, so the censoring
    risk set at ``t`` excludes subjects failing at ``t``.
    """
    time = np.asarray(time, dtype=float)
    event = np.asarray(event)
    uniq, yw, dw, _ = _event_counts(time, event, np.ones_like(time))
    cw = np.add.reduceat((1 - event[np.argsort(time, kind="stable")]).astype(float),
                         np.unique(np.sort(time), return_index=True)[1])
    risk = yw - dw
    keep = cw > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        factors = 1.0 - cw[keep] / risk[keep]
    return StepFunction(uniq[keep], np.cumprod(factors), 1.0, float(time.max()))


def pseudo_values(time, event, eval_times) -> np.ndarray:
    """Jackknife pseudo-observations of the KM survival function.

    ``theta_i(t) = n S(t) - (n - 1) S^{-i}(t)``; returns an
    ``(n, len(eval_times))`` array in the input row order.
    """
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=np.int64)
    eval_times = np.atleast_1d(np.asarray(eval_times, dtype=float))
    n = time.shape[0]
    if n < 2:
        raise DegenerateInputError("pseudo-values need at least 2 subjects", n=n)
    if np.any(eval_times <= 0) or np.any(eval_times > time.max()):
        raise RangeError("evaluation times must lie in (0, max time]",
                         max_time=float(time.max()))
    order = np.argsort(time, kind="stable")
    ts = np.ascontiguousarray(time[order])
    es = np.ascontiguousarray(event[order])
    sort_idx = np.argsort(eval_times, kind="stable")
    ev_sorted = np.ascontiguousarray(eval_times[sort_idx])

    full = weighted_km(time, event, variance="none").curve(ev_sorted)
    loo = np.asarray(_backend.loo_km(ts, es, ev_sorted))
    pv_sorted = n * full[None, :] - (n - 1) * loo

    out = np.empty_like(pv_sorted)
    out[order] = pv_sorted
    res = np.empty_like(out)
    res[:, sort_idx] = out
    # before the first censoring both KMs are plain proportions and the
    # jackknife reduces to the indicator I(T_i > t); use it to avoid rounding
    first_cens = time[event == 0].min() if np.any(event == 0) else np.inf
    exact = eval_times < first_cens
    res[:, exact] = (time[:, None] > eval_times[None, exact]).astype(float)
    return res


def pava_nonincreasing(values, weights=None) -> np.ndarray:
    """Weighted least-squares projection onto non-increasing sequences."""
    values = np.ascontiguousarray(values, dtype=float)
    if weights is None:
        weights = np.ones_like(values)
    weights = np.ascontiguousarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise DomainError("values and weights must be 1-d of equal length")
    if np.any(weights <= 0):
        raise DomainError("weights must be > 0")
    if values.size == 0:
        return values.copy()
    return np.asarray(_backend.pava_nonincreasing(values, weights))


def force_bounds(values) -> np.ndarray:
    """Clamp survival probabilities into ``[0, 1]``."""
    return np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
