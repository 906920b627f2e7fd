"""Confounded simulation designs with closed-form counterfactual survival."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .data import ColumnBindings, SurvDataset, validate_dataset
from .errors import ConfigurationError, DomainError

POSITIVITY_BOUND = 0.01


@dataclass(frozen=True)
class DGPSpec:
    """Binary confounder ``x``, logistic treatment ``z``, exponential hazards.

    The event hazard is ``baseline_hazard * exp(treatment_effect * z +
    confounder_effect * x)``; censoring is exponential with rate
    ``censor_rate`` (0 disables censoring).
    """

    n: int = 1000
    baseline_hazard: float = 0.1
    treatment_effect: float = -0.5
    confounder_effect: float = 1.0
    a0: float = -0.5
    a1: float = 1.5
    censor_rate: float = 0.05

    def validate(self) -> None:
        if self.n < 1:
            raise ConfigurationError("n must be >= 1", n=self.n)
        if not self.baseline_hazard > 0:
            raise ConfigurationError("baseline_hazard must be > 0",
                                     baseline_hazard=self.baseline_hazard)
        if not self.censor_rate >= 0:
            raise ConfigurationError("censor_rate must be >= 0", censor_rate=self.censor_rate)
        for x in (0, 1):
            p = float(expit(self.a0 + self.a1 * x))
            if not POSITIVITY_BOUND <= p <= 1 - POSITIVITY_BOUND:
                raise ConfigurationError("treatment probability too close to 0 or 1",
                                         x=x, probability=p)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DGPSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigurationError(f"unknown DGP keys {unknown}", keys=unknown)
        return cls(**d)


def simulate_arrays(spec: DGPSpec, rng: np.random.Generator) -> dict:
    """Draw one sample as plain arrays (fast path for Monte-Carlo loops)."""
    spec.validate()
    n = spec.n
    x = rng.binomial(1, 0.5, n)
    z = rng.binomial(1, expit(spec.a0 + spec.a1 * x))
    rate = spec.baseline_hazard * np.exp(spec.treatment_effect * z + spec.confounder_effect * x)
    t_event = rng.exponential(1.0 / rate)
    if spec.censor_rate > 0:
        t_cens = rng.exponential(1.0 / spec.censor_rate, n)
    else:
        t_cens = np.full(n, np.inf)
    return {"time": np.minimum(t_event, t_cens), "event": (t_event <= t_cens).astype(int),
            "z": z, "x": x.astype(float)}


def simulate_dgp(spec: DGPSpec, seed: int) -> SurvDataset:
    """Simulate a dataset with columns ``time``, ``event``, ``z`` and ``x``."""
    arrays = simulate_arrays(spec, np.random.default_rng(seed))
    return validate_dataset(arrays, ColumnBindings("time", "event", "z", ("x",)))


def true_curve(spec: DGPSpec, z: int, times) -> np.ndarray:
    """Marginal counterfactual survival ``P(T(z) > t)`` averaged over ``x``."""
    if z not in (0, 1):
        raise DomainError("z must be 0 or 1", z=z)
    t = np.asarray(times, dtype=float)
    lam = spec.baseline_hazard * np.exp(spec.treatment_effect * z)
    return 0.5 * np.exp(-lam * t) + 0.5 * np.exp(-lam * np.exp(spec.confounder_effect) * t)


def true_quantile(spec: DGPSpec, z: int, p: float = 0.5) -> float:
    """Time at which the true curve equals ``p``."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)", p=p)
    lam = spec.baseline_hazard * np.exp(spec.treatment_effect * z)
    hi = -np.log(p) / (lam * min(1.0, np.exp(spec.confounder_effect)))
    return float(brentq(lambda t: float(true_curve(spec, z, t)) - p, 0.0, hi * 1.01 + 1e-12,
                        xtol=1e-14, rtol=1e-15))
