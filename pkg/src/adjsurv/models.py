"""Nuisance models: logistic propensity, Cox/Breslow outcome, pseudo-value GEE."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .data import DesignMatrix
from .errors import (ConvergenceError, DegenerateInputError, DomainError,
                     LinearAlgebraError, RangeError, SchemaError)
from .nonparam import StepFunction

TOL = 1e-8
MAX_ITER = 25


def _values(design) -> np.ndarray:
    return design.values if isinstance(design, DesignMatrix) else np.asarray(design, dtype=float)


def _names(design, p: int) -> tuple[str, ...]:
    if isinstance(design, DesignMatrix):
        return design.column_names
    return tuple(f"x{j}" for j in range(p))


def check_rank(X: np.ndarray, names: Sequence[str]) -> None:
    """Raise naming the first column that is a linear combination of earlier ones."""
    if X.shape[1] == 0:
        return
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    for j in range(X.shape[1]):
        if np.linalg.matrix_rank(Xs[:, : j + 1], tol=1e-9 * max(X.shape)) < j + 1:
            raise LinearAlgebraError(f"design is rank deficient at column {names[j]!r}",
                                     column=names[j])


# --------------------------------------------------------------------------
# logistic regression


@dataclass(frozen=True)
class LogisticFit:
    coefficients: np.ndarray
    column_names: tuple[str, ...]
    converged: bool
    iterations: int
    log_likelihood: float
    #: label modelled as the "1" class and the complementary label (binary use)
    level: Optional[str] = None
    reference: Optional[str] = None


def logistic_loglik(beta, X, y, weights=None) -> float:
    eta = X @ beta
    w = np.ones(len(y)) if weights is None else weights
    # log(1 + e^eta) computed stably
    return float(np.sum(w * (y * eta - np.logaddexp(0.0, eta))))


def logistic_score(beta, X, y, weights=None) -> np.ndarray:
    w = np.ones(len(y)) if weights is None else weights
    return X.T @ (w * (y - expit(X @ beta)))


def fit_logistic(design, response, weights=None, tol: float = TOL,
                 max_iter: int = MAX_ITER, level: Optional[str] = None,
                 reference: Optional[str] = None) -> LogisticFit:
    """Maximum-likelihood logistic regression by Newton-Raphson (IRLS)."""
    X = _values(design)
    names = _names(design, X.shape[1])
    y = np.asarray(response, dtype=float)
    if y.shape[0] != X.shape[0]:
        raise SchemaError("response length does not match design rows")
    if np.all(y == y[0]):
        raise DegenerateInputError("logistic response has a single class",
                                   value=float(y[0]))
    check_rank(X, names)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)

    beta = np.zeros(X.shape[1])
    ll = logistic_loglik(beta, X, y, w)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = logistic_score(beta, X, y, w)
        if np.max(np.abs(grad)) <= tol:
            converged = True
            it -= 1
            break
        p = expit(X @ beta)
        info = (X * (w * p * (1 - p))[:, None]).T @ X
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise LinearAlgebraError("singular information matrix in logistic fit") from None
        new_ll = logistic_loglik(beta + step, X, y, w)
        halvings = 0
        while new_ll < ll - 1e-12 * abs(ll) and halvings < 30:
            step /= 2
            new_ll = logistic_loglik(beta + step, X, y, w)
            halvings += 1
        beta = beta + step
        ll = new_ll
    else:
        converged = np.max(np.abs(logistic_score(beta, X, y, w))) <= tol

    if np.max(np.abs(X @ beta)) > 25:
        raise ConvergenceError("perfect separation: fitted probabilities reach 0 or 1",
                               condition="separation", coefficients=beta.tolist())
    if not converged:
        raise ConvergenceError("logistic regression did not converge",
                               iterations=max_iter, coefficients=beta.tolist())
    return LogisticFit(beta, tuple(names), True, it, ll, level, reference)


@dataclass(frozen=True)
class PropensityModel:
    """Propensity scores for every treatment level.

    Binary treatments use one logistic fit for ``levels[1]``; more levels use
    one-vs-rest fits whose predictions are renormalised to sum to one.
    """

    levels: tuple[str, ...]
    fits: dict
    column_names: tuple[str, ...]

    def predict(self, design, level: str) -> np.ndarray:
        return predict_propensity(self, design, level)


def fit_propensity(design, treatment: np.ndarray, levels: Sequence[str]) -> PropensityModel:
    levels = tuple(levels)
    X = _values(design)
    names = _names(design, X.shape[1])
    if len(levels) == 2:
        fit = fit_logistic(design, treatment == levels[1], level=levels[1], reference=levels[0])
        return PropensityModel(levels, {levels[1]: fit}, names)
    fits = {lev: fit_logistic(design, treatment == lev, level=lev) for lev in levels}
    return PropensityModel(levels, fits, names)


def predict_propensity(fit, design, level: str) -> np.ndarray:
    """Predicted probability of receiving ``level`` for every row of ``design``."""
    X = _values(design)
    names = _names(design, X.shape[1])
    if tuple(names) != tuple(fit.column_names):
        raise SchemaError("design columns do not match the fitted model",
                          expected=list(fit.column_names), got=list(names))
    if isinstance(fit, LogisticFit):
        p = expit(X @ fit.coefficients)
        if fit.level is None or level == fit.level:
            return p
        if level == fit.reference:
            return 1.0 - p
        raise DomainError(f"unknown treatment level {level!r}", level=level)
    if level not in fit.levels:
        raise DomainError(f"unknown treatment level {level!r}", level=level)
    if len(fit.levels) == 2:
        p = expit(X @ fit.fits[fit.levels[1]].coefficients)
        return p if level == fit.levels[1] else 1.0 - p
    probs = np.column_stack([expit(X @ fit.fits[lev].coefficients) for lev in fit.levels])
    probs /= probs.sum(axis=1, keepdims=True)
    return probs[:, fit.levels.index(level)]


# --------------------------------------------------------------------------
# Cox proportional hazards with Breslow ties


@dataclass(frozen=True)
class CoxFit:
    coefficients: np.ndarray
    column_names: tuple[str, ...]
    baseline_cumhaz: StepFunction
    converged: bool
    iterations: int
    partial_log_likelihood: float
    #: when set, the first ``len(treatment_levels) - 1`` columns are treatment indicators
    treatment_levels: Optional[tuple[str, ...]] = None


class _RiskSets:
    """Sorted data with distinct-time bookkeeping for risk-set sums."""

    def __init__(self, X, time, event, weights):
        order = np.argsort(time, kind="stable")
        self.X = X[order]
        self.time = time[order]
        self.event = event[order].astype(float)
        self.w = weights[order]
        self.uniq, self.first = np.unique(self.time, return_index=True)
        self.dw = np.add.reduceat(self.w * self.event, self.first)
        self.has_event = self.dw > 0

    def tail(self, a: np.ndarray) -> np.ndarray:
        """Sums over the risk set ``{T >= t_j}`` for every distinct time."""
        return np.cumsum(a[::-1], axis=0)[::-1][self.first]


def cox_partial_loglik(beta, X, time, event, weights=None) -> float:
    X = np.asarray(X, dtype=float)
    w = np.ones(len(time)) if weights is None else np.asarray(weights, dtype=float)
    rs = _RiskSets(X, np.asarray(time, float), np.asarray(event), w)
    return _cox_terms(rs, np.asarray(beta, float), order=0)[0]


def cox_score(beta, X, time, event, weights=None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    w = np.ones(len(time)) if weights is None else np.asarray(weights, dtype=float)
    rs = _RiskSets(X, np.asarray(time, float), np.asarray(event), w)
    return _cox_terms(rs, np.asarray(beta, float), order=1)[1]


def _cox_terms(rs: _RiskSets, beta: np.ndarray, order: int = 2):
    eta = rs.X @ beta
    shift = eta.max() if eta.size else 0.0
    r = rs.w * np.exp(eta - shift)
    s0 = rs.tail(r)
    ev = rs.has_event
    ll = float(np.sum(rs.w * rs.event * eta) - np.sum(rs.dw[ev] * (np.log(s0[ev]) + shift)))
    if order == 0:
        return ll, None, None
    s1 = rs.tail(r[:, None] * rs.X)
    xbar = s1[ev] / s0[ev, None]
    score = (rs.w * rs.event) @ rs.X - rs.dw[ev] @ xbar
    if order == 1:
        return ll, score, None
    s2 = rs.tail(r[:, None, None] * rs.X[:, :, None] * rs.X[:, None, :])
    v = s2[ev] / s0[ev, None, None] - xbar[:, :, None] * xbar[:, None, :]
    info = np.tensordot(rs.dw[ev], v, axes=1)
    return ll, score, info


def fit_cox(design, time, event, weights=None, tol: float = TOL, max_iter: int = MAX_ITER,
            treatment_levels: Optional[Sequence[str]] = None) -> CoxFit:
    """Cox model by Newton-Raphson on the Breslow partial likelihood.

    ``design`` carries no intercept. The baseline cumulative hazard is the
    (weighted) Breslow estimate at the fitted coefficients, for a subject
    whose design row is all zeros.
    """
    X = _values(design)
    names = _names(design, X.shape[1])
    time = np.asarray(time, dtype=float)
    event = np.asarray(event)
    w = np.ones(len(time)) if weights is None else np.asarray(weights, dtype=float)
    if not np.any((event == 1) & (w > 0)):
        raise DegenerateInputError("Cox model needs at least one event")
    check_rank(X, names)

    center = (w @ X) / w.sum() if X.shape[1] else np.zeros(0)
    rs = _RiskSets(X - center, time, event, w)
    beta = np.zeros(X.shape[1])
    ll, score, info = _cox_terms(rs, beta)
    converged = X.shape[1] == 0 or np.max(np.abs(score)) <= tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise LinearAlgebraError("singular information matrix in Cox fit") from None
        new = _cox_terms(rs, beta + step)
        halvings = 0
        while new[0] < ll - 1e-12 * abs(ll) and halvings < 30:
            step /= 2
            new = _cox_terms(rs, beta + step)
            halvings += 1
        beta = beta + step
        ll, score, info = new
        converged = np.max(np.abs(score)) <= tol
    if not converged:
        raise ConvergenceError("Cox model did not converge", iterations=it,
                               coefficients=beta.tolist())

    r = rs.w * np.exp(rs.X @ beta)
    s0 = rs.tail(r)
    ev = rs.has_event
    # hazard increments for the zero covariate row
    inc = rs.dw[ev] / s0[ev] * np.exp(-(center @ beta))
    baseline = StepFunction(rs.uniq[ev], np.cumsum(inc), 0.0, float(time.max()))
    return CoxFit(beta, tuple(names), baseline, True, it, ll,
                  tuple(treatment_levels) if treatment_levels is not None else None)


def set_treatment(rows: np.ndarray, levels: Sequence[str], level: str) -> np.ndarray:
    """Copy of ``rows`` with the leading treatment-indicator block set to ``level``."""
    rows = np.array(rows, dtype=float, copy=True)
    k = len(levels) - 1
    rows[:, :k] = 0.0
    idx = list(levels).index(level)
    if idx > 0:
        rows[:, idx - 1] = 1.0
    return rows


def predict_cox_survival(fit: CoxFit, rows, times, treatment_level: Optional[str] = None) -> np.ndarray:
    """Conditional survival ``exp(-Lambda0(t) exp(x beta))``, shape (rows, times)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if rows.shape[1] != len(fit.coefficients):
        raise SchemaError("covariate rows do not match the fitted model",
                          expected=len(fit.coefficients), got=rows.shape[1])
    if np.any(times < 0):
        raise DomainError("prediction times must be >= 0")
    end = fit.baseline_cumhaz.support_end
    if end is not None and np.any(times > end):
        raise RangeError("prediction time beyond the baseline hazard support",
                         time=float(times.max()), support_end=end)
    if treatment_level is not None:
        if fit.treatment_levels is None:
            raise SchemaError("model has no treatment columns")
        rows = set_treatment(rows, fit.treatment_levels, treatment_level)
    cumhaz = np.asarray(fit.baseline_cumhaz(times), dtype=float)
    risk = np.exp(rows @ fit.coefficients)
    return np.exp(-np.outer(risk, cumhaz))


# --------------------------------------------------------------------------
# GEE on pseudo-values (independence working correlation)

_LINKS = {
    "identity": (lambda eta: eta, lambda eta: np.ones_like(eta)),
    # survival scale: S = exp(-exp(eta)), i.e. cloglog of 1 - S
    "cloglog": (lambda eta: np.exp(-np.exp(eta)),
                lambda eta: -np.exp(eta - np.exp(eta))),
}


@dataclass(frozen=True)
class GEEFit:
    intercepts: np.ndarray
    coefficients: np.ndarray
    column_names: tuple[str, ...]
    eval_times: np.ndarray
    link: str
    converged: bool
    iterations: int
    treatment_levels: Optional[tuple[str, ...]] = None

    @property
    def all_coefficients(self) -> np.ndarray:
        return np.concatenate([self.intercepts, self.coefficients])


def _gee_solve(G2, GR, X):
    """Solve the block normal equations with one intercept per time point.

    ``G2`` (n, m) squared derivatives, ``GR`` (n, m) derivative times residual.
    """
    a = G2.sum(axis=0)
    if np.any(a <= 0):
        raise LinearAlgebraError("singular stacked design: empty time column")
    B = G2.T @ X                    # (m, p)
    C = X.T @ (X * G2.sum(axis=1)[:, None])
    ra = GR.sum(axis=0)
    rb = X.T @ GR.sum(axis=1)
    schur = C - B.T @ (B / a[:, None])
    if X.shape[1]:
        try:
            cond = np.linalg.cond(schur)
            if not np.isfinite(cond) or cond > 1e12:
                raise np.linalg.LinAlgError
            db = np.linalg.solve(schur, rb - B.T @ (ra / a))
        except np.linalg.LinAlgError:
            raise LinearAlgebraError("singular stacked GEE design") from None
    else:
        db = np.zeros(0)
    da = (ra - B @ db) / a
    return da, db


def fit_gee_pseudo(pv_matrix, design, eval_times, link: str = "identity",
                   tol: float = TOL, max_iter: int = 50,
                   treatment_levels: Optional[Sequence[str]] = None) -> GEEFit:
    """Regress pseudo-values on time-specific intercepts plus shared covariates.

    Gaussian variance, independence working correlation: the estimating
    equations are the normal equations of (non-)linear least squares on the
    stacked (subject, time) data, solved by Gauss-Newton.
    """
    if link not in _LINKS:
        raise DomainError(f"unknown link {link!r}", link=link)
    inv, dinv = _LINKS[link]
    Y = np.atleast_2d(np.asarray(pv_matrix, dtype=float))
    X = _values(design)
    names = _names(design, X.shape[1])
    eval_times = np.atleast_1d(np.asarray(eval_times, dtype=float))
    if Y.shape[0] != X.shape[0]:
        raise SchemaError("pseudo-value rows do not match design rows")
    if Y.shape[1] != eval_times.shape[0]:
        raise SchemaError("pseudo-value columns do not match evaluation times")
    check_rank(np.column_stack([np.ones(X.shape[0]), X]), ("(intercept)",) + tuple(names))
    m = Y.shape[1]

    if link == "identity":
        alpha = np.zeros(m)
    else:
        start = np.clip(Y.mean(axis=0), 0.02, 0.98)
        alpha = np.log(-np.log(start))
    beta = np.zeros(X.shape[1])

    def sse(al, be):
        return float(np.sum((Y - inv(al[None, :] + (X @ be)[:, None])) ** 2))

    cur = sse(alpha, beta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = alpha[None, :] + (X @ beta)[:, None]
        g = dinv(eta)
        res = Y - inv(eta)
        grad = np.concatenate([(g * res).sum(axis=0), X.T @ (g * res).sum(axis=1)])
        if np.max(np.abs(grad)) <= tol:
            converged = True
            it -= 1
            break
        da, db = _gee_solve(g * g, g * res, X)
        step = 1.0
        new = sse(alpha + da, beta + db)
        while new > cur and step > 1e-8:
            step /= 2
            new = sse(alpha + step * da, beta + step * db)
        alpha = alpha + step * da
        beta = beta + step * db
        small = max(np.max(np.abs(step * da)), np.max(np.abs(step * db), initial=0.0)) < 1e-13
        cur = new
        if small:
            converged = True
            break
    if not converged:
        raise ConvergenceError("GEE did not converge", iterations=max_iter)
    return GEEFit(alpha, beta, tuple(names), eval_times, link, True, it,
                  tuple(treatment_levels) if treatment_levels is not None else None)


def predict_gee(fit: GEEFit, rows, treatment_level: Optional[str] = None,
                eval_times=None) -> np.ndarray:
    """Conditional survival predictions at the fitted times, shape (rows, times)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != len(fit.coefficients):
        raise SchemaError("covariate rows do not match the fitted model")
    if treatment_level is not None:
        if fit.treatment_levels is None:
            raise SchemaError("model has no treatment columns")
        rows = set_treatment(rows, fit.treatment_levels, treatment_level)
    alpha = fit.intercepts
    if eval_times is not None:
        eval_times = np.atleast_1d(np.asarray(eval_times, dtype=float))
        pos = np.searchsorted(fit.eval_times, eval_times)
        ok = (pos < len(fit.eval_times)) & (fit.eval_times[np.minimum(pos, len(fit.eval_times) - 1)] == eval_times)
        if not np.all(ok):
            raise RangeError("GEE predictions exist only at the fitted evaluation times")
        alpha = alpha[pos]
    inv = _LINKS[fit.link][0]
    return inv(alpha[None, :] + (rows @ fit.coefficients)[:, None])
