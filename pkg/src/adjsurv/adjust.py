"""Counterfactual survival curve estimators and the ``adjustedsurv`` dispatcher.

Every method maps a :class:`SurvDataset` to one curve per treatment level,
evaluated on a shared time grid. Values past a curve's estimable range are
NaN on the grid and are dropped from the per-group :class:`SurvCurve`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from .data import DesignMatrix, SurvDataset, expand_design, treatment_indicators
from .errors import (ConfigurationError, DomainError, EstimabilityError,
                     PositivityError, StrataTypeError, UnsupportedMethodError)
from .models import (fit_cox, fit_gee_pseudo, fit_propensity, predict_cox_survival,
                     predict_gee, predict_propensity)
from .nonparam import (StepFunction, SurvCurve, censoring_km, force_bounds,
                       pava_nonincreasing, pseudo_values, step_eval, weighted_km)

METHODS = ("km", "strat_cupples", "strat_amato", "strat_nieto", "direct", "direct_pseudo",
           "iptw_km", "iptw_cox", "iptw_pseudo", "aiptw", "aiptw_pseudo", "matching")
NEEDS_TREATMENT_MODEL = {"iptw_km", "iptw_cox", "iptw_pseudo", "aiptw", "aiptw_pseudo", "matching"}
NEEDS_OUTCOME_MODEL = {"direct", "direct_pseudo", "aiptw", "aiptw_pseudo"}
NEEDS_STRATA = {"strat_cupples", "strat_amato", "strat_nieto"}
BINARY_ONLY = {"aiptw", "matching"}
PSEUDO_METHODS = {"iptw_pseudo", "direct_pseudo", "aiptw_pseudo"}
#: methods whose raw output may leave [0, 1] or increase
UNCONSTRAINED = {"iptw_pseudo", "direct_pseudo", "aiptw_pseudo", "aiptw"}

POSITIVITY_EPS = 1e-12


@dataclass(frozen=True)
class MethodSpec:
    """Adjustment method plus the model formulas and options it needs.

    Recognised options: ``stabilize`` (bool), ``trim_quantile`` (q in (0.5, 1)),
    ``gee_link`` (``identity``/``cloglog``), ``normalize`` (iptw_pseudo),
    ``treated_level`` and ``caliper`` (matching), ``reference_weights``
    (strat_nieto, stratum label to weight).
    """

    method: str
    treatment_formula: Optional[str] = None
    outcome_formula: Optional[str] = None
    strata: Optional[tuple[str, ...]] = None
    options: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.strata is not None:
            strata = (self.strata,) if isinstance(self.strata, str) else tuple(self.strata)
            object.__setattr__(self, "strata", strata)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}", method=self.method,
                                     choices=list(METHODS))
        if self.method in NEEDS_TREATMENT_MODEL and not self.treatment_formula:
            raise ConfigurationError(f"method {self.method!r} requires treatment_formula",
                                     missing="treatment_formula")
        if self.method in NEEDS_OUTCOME_MODEL and not self.outcome_formula:
            raise ConfigurationError(f"method {self.method!r} requires outcome_formula",
                                     missing="outcome_formula")
        if self.method in NEEDS_STRATA and not self.strata:
            raise ConfigurationError(f"method {self.method!r} requires strata",
                                     missing="strata")

    def to_dict(self) -> dict:
        return {"method": self.method, "treatment_formula": self.treatment_formula,
                "outcome_formula": self.outcome_formula,
                "strata": list(self.strata) if self.strata else None,
                "options": dict(sorted(self.options.items()))}


@dataclass(frozen=True)
class IPTWWeights:
    w: np.ndarray
    stabilized: bool
    trim_quantile: Optional[float]
    #: fitted probability of the observed treatment
    propensity: np.ndarray


@dataclass(frozen=True, eq=False)
class AdjustedSurv:
    """Per-group counterfactual curves on a shared grid."""

    curves: dict
    method: MethodSpec
    eval_times: np.ndarray
    corrections_applied: dict = field(default_factory=lambda: {"force_bounds": False,
                                                               "iso_reg": False})
    boot: Any = None
    conf_level: float = 0.95
    #: True where raw (pre-correction) output left [0, 1] or increased
    raw_violations: bool = False
    dropped_rows: int = 0

    @property
    def groups(self) -> tuple[str, ...]:
        return tuple(self.curves)

    def surv_matrix(self) -> np.ndarray:
        """Estimates as (groups, eval_times); NaN past each curve's support."""
        return np.vstack([_to_grid(c.curve, self.eval_times) for c in self.curves.values()])

    def __getitem__(self, group: str) -> SurvCurve:
        return self.curves[group]


def _to_grid(f: StepFunction, grid: np.ndarray, values=None) -> np.ndarray:
    out = np.asarray(step_eval(replace(f, values=f.values if values is None else values),
                               grid), dtype=float)
    if f.support_end is not None:
        out = np.where(grid > f.support_end, np.nan, out)
    return np.atleast_1d(out)


def default_grid(data: SurvDataset) -> np.ndarray:
    return np.concatenate([[0.0], np.unique(data.time[data.event == 1])])


def make_grid(data: SurvDataset, times=None) -> np.ndarray:
    if times is None:
        return default_grid(data)
    grid = np.unique(np.atleast_1d(np.asarray(times, dtype=float)))
    if grid.size == 0:
        raise DomainError("times must not be empty")
    if np.any(grid < 0) or not np.all(np.isfinite(grid)):
        raise DomainError("times must be finite and >= 0")
    return grid


# --------------------------------------------------------------------------
# shared pieces


def _treatment_design(data: SurvDataset, formula: str):
    return expand_design(data, formula, intercept=True)


def _outcome_design(data: SurvDataset, formula: str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Treatment indicators followed by the (intercept-free) covariate expansion."""
    levels = data.levels
    tz = treatment_indicators(data.treatment, levels)
    names = tuple(f"{data.bindings.treatment}={lev}" for lev in levels[1:])
    cov = expand_design(data, formula, intercept=False)
    return np.column_stack([tz, cov.values]), names + cov.column_names


def compute_iptw_weights(data: SurvDataset, treatment_formula: str, stabilize: bool = False,
                         trim_quantile: Optional[float] = None) -> IPTWWeights:
    """Inverse probability of treatment weights ``1 / pi(Z_i | x_i)``.

    Stabilised weights are multiplied by the marginal share of the subject's
    group. With ``trim_quantile=q`` weights are clamped to the
    ``[1-q, q]`` quantile range.
    """
    design = _treatment_design(data, treatment_formula)
    model = fit_propensity(design, data.treatment, data.levels)
    ps = np.empty(data.n)
    for lev in data.levels:
        mask = data.treatment == lev
        ps[mask] = predict_propensity(model, design, lev)[mask]
    bad = np.flatnonzero(ps <= POSITIVITY_EPS)
    if bad.size:
        raise PositivityError("propensity score numerically 0", rows=bad[:20].tolist(),
                              count=int(bad.size))
    w = 1.0 / ps
    if stabilize:
        share = {lev: np.mean(data.treatment == lev) for lev in data.levels}
        w = w * np.array([share[z] for z in data.treatment])
    if trim_quantile is not None:
        q = float(trim_quantile)
        if not 0.5 < q < 1:
            raise DomainError("trim_quantile must lie in (0.5, 1)", trim_quantile=q)
        lo, hi = np.quantile(w, [1 - q, q])
        w = np.clip(w, lo, hi)
    return IPTWWeights(w, stabilize, trim_quantile, ps)


def _propensity_all(data: SurvDataset, formula: str) -> dict:
    design = _treatment_design(data, formula)
    model = fit_propensity(design, data.treatment, data.levels)
    out = {lev: predict_propensity(model, design, lev) for lev in data.levels}
    for lev, p in out.items():
        bad = np.flatnonzero(p <= POSITIVITY_EPS)
        if bad.size:
            raise PositivityError(f"propensity score for {lev!r} numerically 0",
                                  rows=bad[:20].tolist(), level=lev)
    return out


def _pv_grid(data: SurvDataset, grid: np.ndarray):
    """Pseudo-values at the positive grid times within the data range."""
    inside = (grid > 0) & (grid <= data.time.max())
    pv = pseudo_values(data.time, data.event, grid[inside]) if inside.any() else np.empty((data.n, 0))
    return inside, pv


def _fill(grid: np.ndarray, inside: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.full(grid.shape, np.nan)
    out[grid == 0] = 1.0
    out[inside] = values
    return out


@dataclass
class _Raw:
    values: np.ndarray           # on the grid, NaN outside support
    support_end: float
    se: Optional[np.ndarray] = None
    n_risk: Optional[np.ndarray] = None
    n_event: Optional[np.ndarray] = None


def _from_curve(sc: SurvCurve, grid: np.ndarray) -> _Raw:
    vals = _to_grid(sc.curve, grid)
    se = None
    if sc.se is not None:
        se = _to_grid(sc.curve, grid, values=sc.se)
        se = np.where(grid < (sc.times[0] if len(sc.times) else np.inf), 0.0, se)
    return _Raw(vals, sc.support_end, se)


# --------------------------------------------------------------------------
# methods


def method_km(data: SurvDataset, grid: Optional[np.ndarray] = None) -> dict:
    """Unadjusted Kaplan-Meier per group. For reference only: it is biased
    whenever treatment groups differ in confounders."""
    grid = default_grid(data) if grid is None else grid
    return {lev: _from_curve(weighted_km(data.time[m], data.event[m], group=lev), grid)
            for lev in data.levels for m in [data.treatment == lev]}


def method_iptw(data: SurvDataset, spec: MethodSpec, variant: str = "km",
                grid: Optional[np.ndarray] = None, weights: Optional[np.ndarray] = None) -> dict:
    """IPTW-weighted curves: weighted KM, weighted Cox, or weighted pseudo-values.

    ``weights`` overrides the propensity-score weights (e.g. externally
    computed balancing weights).
    """
    grid = default_grid(data) if grid is None else grid
    opts = spec.options
    if weights is None:
        stabilize = opts.get("stabilize")
        if stabilize is None:
            stabilize = variant == "pseudo"
        w = compute_iptw_weights(data, spec.treatment_formula, bool(stabilize),
                                 opts.get("trim_quantile")).w
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (data.n,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite, > 0 and one per subject")

    if variant == "km":
        return {lev: _from_curve(weighted_km(data.time[m], data.event[m], w[m], group=lev), grid)
                for lev in data.levels for m in [data.treatment == lev]}

    if variant == "cox":
        levels = data.levels
        tz = treatment_indicators(data.treatment, levels)
        names = tuple(f"{data.bindings.treatment}={lev}" for lev in levels[1:])
        fit = fit_cox(_dm(tz, names), data.time, data.event, weights=w,
                      treatment_levels=levels)
        end = fit.baseline_cumhaz.support_end
        inside = grid <= end
        out = {}
        for lev in levels:
            row = np.zeros((1, len(levels) - 1))
            pred = predict_cox_survival(fit, row, grid[inside], treatment_level=lev)[0]
            vals = np.full(grid.shape, np.nan)
            vals[inside] = pred
            out[lev] = _Raw(vals, end)
        return out

    if variant == "pseudo":
        inside, pv = _pv_grid(data, grid)
        normalize = opts.get("normalize", True)
        out = {}
        for lev in data.levels:
            m = data.treatment == lev
            wz = w[m]
            th = pv[m]
            if normalize:
                est = wz @ th / wz.sum()
                se = np.sqrt((wz ** 2) @ (th - est) ** 2) / wz.sum()
            else:
                denom = m.sum() if opts.get("stabilize", True) else data.n
                est = wz @ th / denom
                se = np.sqrt((wz ** 2) @ (th - est) ** 2) / denom
            se_full = _fill(grid, inside, se)
            se_full[grid == 0] = 0.0
            out[lev] = _Raw(_fill(grid, inside, est), float(data.time.max()), se_full)
        return out

    raise DomainError(f"unknown IPTW variant {variant!r}")


def _dm(values, names) -> DesignMatrix:
    return DesignMatrix(np.asarray(values, dtype=float), tuple(names), (), False)


def method_direct(data: SurvDataset, spec: MethodSpec, variant: str = "outcome_model",
                  grid: Optional[np.ndarray] = None) -> dict:
    """G-computation: average conditional predictions over all subjects."""
    grid = default_grid(data) if grid is None else grid
    X, names = _outcome_design(data, spec.outcome_formula)
    levels = data.levels
    out = {}
    if variant == "outcome_model":
        fit = fit_cox(_dm(X, names), data.time, data.event, treatment_levels=levels)
        end = fit.baseline_cumhaz.support_end
        inside = grid <= end
        for lev in levels:
            pred = predict_cox_survival(fit, X, grid[inside], treatment_level=lev)
            vals = np.full(grid.shape, np.nan)
            vals[inside] = pred.mean(axis=0)
            out[lev] = _Raw(vals, end)
        return out
    if variant == "pseudo":
        inside, pv = _pv_grid(data, grid)
        fit = fit_gee_pseudo(pv, _dm(X, names), grid[inside],
                             link=spec.options.get("gee_link", "identity"),
                             treatment_levels=levels)
        for lev in levels:
            pred = predict_gee(fit, X, treatment_level=lev)
            out[lev] = _Raw(_fill(grid, inside, pred.mean(axis=0)), float(data.time.max()))
        return out
    raise DomainError(f"unknown direct variant {variant!r}")


def method_aiptw(data: SurvDataset, spec: MethodSpec, variant: str = "closed_form",
                 grid: Optional[np.ndarray] = None) -> dict:
    """Augmented IPTW combining a propensity model and an outcome model.

    ``closed_form`` weights the survival indicator by the inverse of the
    pooled censoring KM; ``pseudo`` replaces it by pseudo-values and uses the
    pseudo-value GEE as outcome model.
    """
    grid = default_grid(data) if grid is None else grid
    levels = data.levels
    if variant == "closed_form" and len(levels) > 2:
        raise UnsupportedMethodError("aiptw supports binary treatments only",
                                     levels=list(levels))
    ps = _propensity_all(data, spec.treatment_formula)
    X, names = _outcome_design(data, spec.outcome_formula)
    out = {}
    if variant == "closed_form":
        fit = fit_cox(_dm(X, names), data.time, data.event, treatment_levels=levels)
        G = censoring_km(data.time, data.event)
        g = np.atleast_1d(G(grid))
        inside = (grid <= data.time.max()) & (g > 0)
        t_in = grid[inside]
        at_risk = data.time[:, None] > t_in[None, :]
        ipcw = at_risk / g[inside][None, :]
        for lev in levels:
            ind = (data.treatment == lev).astype(float)
            m = predict_cox_survival(fit, X, t_in, treatment_level=lev)
            ratio = ind / ps[lev]
            est = np.mean(ratio[:, None] * ipcw + m * (1.0 - ratio)[:, None], axis=0)
            vals = np.full(grid.shape, np.nan)
            vals[inside] = est
            end = float(t_in.max()) if t_in.size else 0.0
            out[lev] = _Raw(vals, end)
        return out
    if variant == "pseudo":
        inside, pv = _pv_grid(data, grid)
        fit = fit_gee_pseudo(pv, _dm(X, names), grid[inside],
                             link=spec.options.get("gee_link", "identity"),
                             treatment_levels=levels)
        for lev in levels:
            ind = (data.treatment == lev).astype(float)
            m = predict_gee(fit, X, treatment_level=lev)
            p = ps[lev][:, None]
            est = np.mean(pv * ind[:, None] / p - (ind[:, None] - p) / p * m, axis=0)
            out[lev] = _Raw(_fill(grid, inside, est), float(data.time.max()))
        return out
    raise DomainError(f"unknown aiptw variant {variant!r}")


def match_nearest(ps_treated: np.ndarray, ps_control: np.ndarray,
                  caliper: Optional[float] = None) -> np.ndarray:
    """Index into ``ps_control`` of each treated unit's nearest control.

    Matching is with replacement; equal distances go to the lowest control
    index. Unmatched units (outside the caliper) get -1.
    """
    order = np.lexsort((np.arange(len(ps_control)), ps_control))
    sorted_ps = ps_control[order]
    right = np.searchsorted(sorted_ps, ps_treated, side="left")
    left = right - 1
    # first occurrence of each neighbour value = lowest index among ties
    lv = sorted_ps[np.maximum(left, 0)]
    rv = sorted_ps[np.minimum(right, len(sorted_ps) - 1)]
    li = order[np.searchsorted(sorted_ps, lv, side="left")]
    ri = order[np.searchsorted(sorted_ps, rv, side="left")]
    dl = np.where(left >= 0, np.abs(ps_treated - lv), np.inf)
    dr = np.where(right < len(sorted_ps), np.abs(rv - ps_treated), np.inf)
    pick = np.where((dr < dl) | ((dr == dl) & (ri < li)), ri, li)
    if caliper is not None:
        pick = np.where(np.minimum(dl, dr) <= caliper, pick, -1)
    return pick


def method_matching(data: SurvDataset, spec: MethodSpec, grid: Optional[np.ndarray] = None) -> dict:
    """1:1 nearest-neighbour propensity matching of controls to treated units,
    with replacement, followed by KM on the matched sample. Estimates curves
    for the treated population."""
    grid = default_grid(data) if grid is None else grid
    levels = data.levels
    if len(levels) != 2:
        raise UnsupportedMethodError("matching supports binary treatments only",
                                     levels=list(levels))
    treated = spec.options.get("treated_level", levels[1])
    if treated not in levels:
        raise ConfigurationError(f"unknown treated_level {treated!r}", treated_level=treated)
    control = levels[0] if treated == levels[1] else levels[1]
    ps = _propensity_all(data, spec.treatment_formula)[treated]
    t_idx = np.flatnonzero(data.treatment == treated)
    c_idx = np.flatnonzero(data.treatment == control)
    pick = match_nearest(ps[t_idx], ps[c_idx], spec.options.get("caliper"))
    keep = pick >= 0
    if not keep.any():
        raise EstimabilityError("no treated unit has a control within the caliper")
    counts = np.bincount(pick[keep], minlength=len(c_idx)).astype(float)
    used = counts > 0
    out = {}
    tk = t_idx[keep]
    out[treated] = _from_curve(weighted_km(data.time[tk], data.event[tk], variance="none",
                                           group=treated), grid)
    cu = c_idx[used]
    out[control] = _from_curve(weighted_km(data.time[cu], data.event[cu], counts[used],
                                           variance="none", group=control), grid)
    return {lev: out[lev] for lev in levels}


def _strata_labels(data: SurvDataset, columns: Sequence[str]) -> np.ndarray:
    parts = []
    for col in columns:
        if col not in data.covariates:
            raise ConfigurationError(f"unknown strata column {col!r}", column=col)
        x = data.covariates[col]
        if data.kinds[col] == "numeric":
            if not np.all(np.equal(np.mod(x, 1), 0)):
                raise StrataTypeError(f"strata column {col!r} is continuous", column=col)
            parts.append([str(int(v)) for v in x])
        else:
            parts.append([str(v) for v in x])
    return np.array(["|".join(vals) for vals in zip(*parts)], dtype=object)


def method_stratified(data: SurvDataset, strata: Sequence[str], variant: str = "cupples",
                      grid: Optional[np.ndarray] = None,
                      reference_weights: Optional[dict] = None) -> dict:
    """Stratification on discrete confounders.

    ``cupples``/``nieto`` average stratum-specific KMs with stratum weights;
    nieto adds the combined Greenwood variance and accepts external
    reference weights. ``amato`` runs one product-limit per group with
    subject weights ``(n_s/n) / (n_sz/n_z)``.
    """
    grid = default_grid(data) if grid is None else grid
    s = _strata_labels(data, strata)
    levels = data.levels
    strata_levels = sorted(set(s.tolist()))
    n = data.n
    for lev in levels:
        for st in strata_levels:
            if not np.any((s == st) & (data.treatment == lev)):
                raise EstimabilityError(f"empty cell: stratum {st!r} x treatment {lev!r}",
                                        stratum=st, treatment=lev)
    share = {st: np.mean(s == st) for st in strata_levels}
    out = {}
    if variant == "amato":
        for lev in levels:
            m = data.treatment == lev
            nz = m.sum()
            cell = {st: np.sum(m & (s == st)) for st in strata_levels}
            w = np.array([share[st] / (cell[st] / nz) for st in s[m]])
            out[lev] = _from_curve(weighted_km(data.time[m], data.event[m], w, group=lev), grid)
        return out
    if variant not in ("cupples", "nieto"):
        raise DomainError(f"unknown stratified variant {variant!r}")
    weights = dict(share)
    if reference_weights is not None and variant == "nieto":
        missing = [st for st in strata_levels if st not in reference_weights]
        if missing:
            raise ConfigurationError("reference weights miss strata", strata=missing)
        total = sum(float(reference_weights[st]) for st in strata_levels)
        weights = {st: float(reference_weights[st]) / total for st in strata_levels}
    for lev in levels:
        est = np.zeros(grid.shape)
        var = np.zeros(grid.shape)
        end = np.inf
        for st in strata_levels:
            m = (data.treatment == lev) & (s == st)
            sc = weighted_km(data.time[m], data.event[m])
            raw = _from_curve(sc, grid)
            est = est + weights[st] * raw.values
            var = var + weights[st] ** 2 * raw.se ** 2
            end = min(end, sc.support_end)
        out[lev] = _Raw(est, end, np.sqrt(var) if variant == "nieto" else None)
    return out


def estimate_raw(data: SurvDataset, spec: MethodSpec, grid: np.ndarray) -> dict:
    """Run one method on the grid; returns level -> raw estimates."""
    method = spec.method
    levels = data.levels
    if method in BINARY_ONLY and len(levels) != 2:
        raise UnsupportedMethodError(f"{method} supports binary treatments only",
                                     levels=list(levels))
    if method == "km":
        return method_km(data, grid)
    if method.startswith("iptw_"):
        return method_iptw(data, spec, method.split("_", 1)[1], grid,
                           weights=spec.options.get("weights"))
    if method == "direct":
        return method_direct(data, spec, "outcome_model", grid)
    if method == "direct_pseudo":
        return method_direct(data, spec, "pseudo", grid)
    if method == "aiptw":
        return method_aiptw(data, spec, "closed_form", grid)
    if method == "aiptw_pseudo":
        return method_aiptw(data, spec, "pseudo", grid)
    if method == "matching":
        return method_matching(data, spec, grid)
    if method.startswith("strat_"):
        return method_stratified(data, spec.strata, method.split("_", 1)[1], grid,
                                 spec.options.get("reference_weights"))
    raise ConfigurationError(f"unknown method {method!r}")


def correct(values: np.ndarray, force: bool, iso: bool) -> np.ndarray:
    """Apply bounds truncation then isotonic regression to the finite prefix."""
    values = np.asarray(values, dtype=float).copy()
    ok = np.isfinite(values)
    v = values[ok]
    if force:
        v = force_bounds(v)
    if iso and v.size:
        v = pava_nonincreasing(v)
    values[ok] = v
    return values


def _violates(values: np.ndarray) -> bool:
    v = values[np.isfinite(values)]
    return bool(v.size and (np.any(v < 0) or np.any(v > 1) or np.any(np.diff(v) > 0)))


def estimate_matrix(data: SurvDataset, spec: MethodSpec, grid: np.ndarray,
                    levels: Sequence[str], force: bool = False, iso: bool = False) -> np.ndarray:
    """Corrected estimates as (levels, grid); used for bootstrap replicates."""
    if tuple(data.levels) != tuple(levels):
        raise EstimabilityError("a treatment level is missing from the sample",
                                levels=list(data.levels))
    raw = estimate_raw(data, spec, grid)
    return np.vstack([correct(raw[lev].values, force, iso) for lev in levels])


def adjustedsurv(data: SurvDataset, spec: MethodSpec, times=None, conf_int: bool = False,
                 conf_level: float = 0.95, bootstrap: bool = False, n_boot: int = 500,
                 seed: Optional[int] = None, workers: int = 1, force_bounds: bool = False,
                 iso_reg: bool = False, ci_transform: str = "plain",
                 boot_ci: str = "percentile") -> AdjustedSurv:
    """Estimate counterfactual survival curves for every treatment level.

    Parameters
    ----------
    data : SurvDataset
    spec : MethodSpec
        Method name, formulas and options.
    times : sequence of float, optional
        Evaluation times; defaults to 0 plus all observed event times.
    conf_int : bool
        Attach approximate point-wise intervals (only for methods with a
        closed-form standard error).
    bootstrap, n_boot, seed, workers
        Nonparametric bootstrap with full refitting; ``seed`` is required.
    force_bounds, iso_reg
        Truncate to ``[0, 1]`` and/or project onto non-increasing curves.
    ci_transform : {"plain", "loglog"}
        Scale of the approximate intervals.
    boot_ci : {"percentile", "normal"}
        Bootstrap interval type; it replaces any approximate interval.
    """
    from .inference import approx_ci, bootstrap_curves, z_value

    spec.validate()
    if not 0 < conf_level < 1:
        raise ConfigurationError("conf_level must lie in (0, 1)", conf_level=conf_level)
    if boot_ci not in ("percentile", "normal"):
        raise ConfigurationError(f"unknown bootstrap interval {boot_ci!r}", boot_ci=boot_ci)
    grid = make_grid(data, times)
    raw = estimate_raw(data, spec, grid)

    curves = {}
    violations = False
    for lev in data.levels:
        r = raw[lev]
        violations = violations or _violates(r.values)
        vals = correct(r.values, force_bounds, iso_reg)
        keep = np.isfinite(vals) & (grid <= r.support_end)
        sc = SurvCurve(curve=StepFunction(grid[keep], vals[keep], 1.0, float(r.support_end)),
                       group=lev, se=None if r.se is None else r.se[keep])
        if conf_int:
            sc = approx_ci(sc, conf_level, transform=ci_transform, method=spec.method)
        curves[lev] = sc

    adj = AdjustedSurv(curves=curves, method=spec, eval_times=grid,
                       corrections_applied={"force_bounds": bool(force_bounds),
                                            "iso_reg": bool(iso_reg)},
                       conf_level=conf_level, raw_violations=violations,
                       dropped_rows=data.dropped_rows)
    if bootstrap:
        if seed is None:
            raise ConfigurationError("bootstrap requires a seed", missing="seed")
        boot = bootstrap_curves(data, spec, n_boot=n_boot, seed=seed, conf_level=conf_level,
                                grid=grid, force_bounds=force_bounds, iso_reg=iso_reg,
                                workers=workers)
        z = z_value(conf_level)
        banded = {}
        for i, (lev, sc) in enumerate(curves.items()):
            pos = np.searchsorted(grid, sc.times)
            if boot_ci == "percentile":
                lo, hi = boot.ci_lower[i, pos], boot.ci_upper[i, pos]
            else:
                lo = np.clip(sc.surv - z * boot.sd[i, pos], 0.0, 1.0)
                hi = np.clip(sc.surv + z * boot.sd[i, pos], 0.0, 1.0)
            banded[lev] = replace(sc, ci_lower=lo, ci_upper=hi)
        adj = replace(adj, curves=banded, boot=boot)
    return adj
