"""Bootstrap and approximate point-wise confidence intervals."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.stats import norm

from .data import SurvDataset
from .errors import (AdjSurvError, CapabilityError, ConfigurationError, DomainError,
                     InstabilityError)
from .nonparam import SurvCurve

MAX_FAILED_FRACTION = 0.05


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    """Replicate curves on the original grid.

    ``replicates`` has shape (successful replicates, groups, eval_times);
    ``replicate_ids`` gives each row's index in the seed stream.
    """

    replicates: np.ndarray
    replicate_ids: np.ndarray
    n_boot: int
    seed: int
    failed_replicates: int
    levels: tuple
    eval_times: np.ndarray
    conf_level: float
    sd: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray

    def group_index(self, group: str) -> int:
        return self.levels.index(group)


def z_value(conf_level: float) -> float:
    if not 0 < conf_level < 1:
        raise DomainError("conf_level must lie in (0, 1)", conf_level=conf_level)
    return float(norm.ppf(1 - (1 - conf_level) / 2))


def percentile_interval(samples: np.ndarray, conf_level: float, axis: int = 0):
    alpha = 1 - conf_level
    with np.errstate(all="ignore"):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            lo = np.nanquantile(samples, alpha / 2, axis=axis)
            hi = np.nanquantile(samples, 1 - alpha / 2, axis=axis)
    return lo, hi


def _replicate(args):
    data, spec, grid, levels, child, force, iso = args
    from .adjust import estimate_matrix

    rng = np.random.default_rng(child)
    idx = rng.integers(0, data.n, data.n)
    try:
        return estimate_matrix(data.subset(idx), spec, grid, levels, force, iso)
    except (AdjSurvError, np.linalg.LinAlgError, FloatingPointError):
        return None


def bootstrap_curves(data: SurvDataset, spec, n_boot: int, seed: int,
                     conf_level: float = 0.95, grid: Optional[np.ndarray] = None,
                     force_bounds: bool = False, iso_reg: bool = False,
                     workers: int = 1) -> BootstrapResult:
    """Resample subjects with replacement and re-run the full estimation.

    Replicate ``i`` draws from its own stream spawned from ``seed``, so the
    result does not depend on ``workers`` and the first ``k`` replicates are
    the same for any ``n_boot >= k``. Replicates that fail (non-convergence,
    a vanished treatment level) are dropped and counted.
    """
    from .adjust import default_grid

    if n_boot < 2:
        raise ConfigurationError("n_boot must be >= 2", n_boot=n_boot)
    if seed is None:
        raise ConfigurationError("bootstrap requires a seed", missing="seed")
    grid = default_grid(data) if grid is None else np.asarray(grid, dtype=float)
    levels = data.levels
    children = np.random.SeedSequence(seed).spawn(n_boot)
    jobs = [(data, spec, grid, levels, child, force_bounds, iso_reg) for child in children]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, n_boot // (4 * workers))))
    else:
        results = [_replicate(job) for job in jobs]

    ok = [i for i, r in enumerate(results) if r is not None]
    failed = n_boot - len(ok)
    if failed / n_boot >= MAX_FAILED_FRACTION:
        raise InstabilityError(f"{failed} of {n_boot} bootstrap replicates failed",
                               failed_replicates=failed, n_boot=n_boot)
    reps = np.stack([results[i] for i in ok]) if ok else np.empty((0, len(levels), len(grid)))
    with np.errstate(all="ignore"):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sd = np.nanstd(reps, axis=0, ddof=1)
    lo, hi = percentile_interval(reps, conf_level)
    return BootstrapResult(reps, np.asarray(ok), n_boot, int(seed), failed, tuple(levels),
                           grid, conf_level, sd, lo, hi)


def approx_ci(curve: SurvCurve, conf_level: float = 0.95, transform: str = "plain",
              method: Optional[str] = None) -> SurvCurve:
    """Point-wise ``estimate +/- z * se`` bands, clamped to ``[0, 1]``.

    ``transform="loglog"`` builds the band on the ``log(-log S)`` scale instead.
    """
    if curve.se is None:
        raise CapabilityError(
            f"no approximate standard errors for method {method or 'this curve'!r}; "
            "use bootstrap=True instead", method=method)
    z = z_value(conf_level)
    est = curve.surv
    se = curve.se
    if transform == "plain":
        lo = est - z * se
        hi = est + z * se
    elif transform == "loglog":
        with np.errstate(divide="ignore", invalid="ignore"):
            log_s = np.log(est)
            se_t = se / np.abs(est * log_s)
            lo = est ** np.exp(z * se_t)
            hi = est ** np.exp(-z * se_t)
        flat = (est <= 0) | (est >= 1) | (se == 0)
        lo = np.where(flat, est, lo)
        hi = np.where(flat, est, hi)
    else:
        raise DomainError(f"unknown transform {transform!r}")
    return replace(curve, ci_lower=np.clip(lo, 0.0, 1.0), ci_upper=np.clip(hi, 0.0, 1.0))
