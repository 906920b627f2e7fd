"""Validated survival datasets and additive design matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import BindingError, LinearAlgebraError, ParseError, ValidationError

MISSING_TOKENS = frozenset({"", "NA", "NaN", "nan", "N/A", "null", "None"})


@dataclass(frozen=True)
class ColumnBindings:
    """Which raw columns play the roles of time, event and treatment.

    ``covariates=None`` binds every remaining column.
    """

    time: str = "time"
    event: str = "event"
    treatment: str = "treatment"
    covariates: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.covariates is not None:
            object.__setattr__(self, "covariates", tuple(self.covariates))


@dataclass(frozen=True, eq=False)
class SurvDataset:
    """Right-censored survival data with a categorical treatment.

    Attributes
    ----------
    time : ndarray of float
        Observed follow-up, strictly positive.
    event : ndarray of int
        1 if the event was observed, 0 if right-censored.
    treatment : ndarray of str
        Treatment label per subject.
    covariates : dict
        Column name to array; numeric columns are float, categorical are str.
    kinds : dict
        Column name to ``"numeric"`` or ``"categorical"``.
    """

    time: np.ndarray
    event: np.ndarray
    treatment: np.ndarray
    covariates: dict[str, np.ndarray]
    kinds: dict[str, str]
    bindings: ColumnBindings = field(default_factory=ColumnBindings)
    dropped_rows: int = 0

    @property
    def n(self) -> int:
        return int(self.time.shape[0])

    @property
    def levels(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.treatment.tolist())))

    def group_mask(self, level: str) -> np.ndarray:
        return self.treatment == level

    def subset(self, index: np.ndarray) -> "SurvDataset":
        """Rows ``index`` (with repetition allowed), keeping column kinds."""
        index = np.asarray(index)
        return SurvDataset(
            time=self.time[index],
            event=self.event[index],
            treatment=self.treatment[index],
            covariates={k: v[index] for k, v in self.covariates.items()},
            kinds=dict(self.kinds),
            bindings=self.bindings,
            dropped_rows=0,
        )

    def to_table(self) -> dict[str, list]:
        b = self.bindings
        table: dict[str, list] = {
            b.time: self.time.tolist(),
            b.event: self.event.tolist(),
            b.treatment: self.treatment.tolist(),
        }
        for k, v in self.covariates.items():
            table[k] = v.tolist()
        return table

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SurvDataset):
            return NotImplemented
        return (
            self.kinds == other.kinds
            and self.bindings == other.bindings
            and self.dropped_rows == other.dropped_rows
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.event, other.event)
            and np.array_equal(self.treatment, other.treatment)
            and self.covariates.keys() == other.covariates.keys()
            and all(np.array_equal(v, other.covariates[k]) for k, v in self.covariates.items())
        )


def is_missing(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, str):
        return value.strip() in MISSING_TOKENS
    if isinstance(value, (float, np.floating)):
        return math.isnan(value)
    return False


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating, bool, np.bool_))


def label(value: Any) -> str:
    """Canonical string label for a treatment or categorical value."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return str(int(f)) if f.is_integer() else repr(f)
    return str(value)


def validate_dataset(raw: Mapping[str, Sequence] | SurvDataset,
                     bindings: ColumnBindings | None = None) -> SurvDataset:
    """Check a raw column table and turn it into a :class:`SurvDataset`.

    Rows with a missing value in any bound column are dropped (listwise
    deletion) and counted in ``dropped_rows``. Row numbers in error messages
    are 0-based positions in the raw table.
    """
    if isinstance(raw, SurvDataset):
        if bindings is not None and bindings != raw.bindings:
            raise BindingError("dataset already bound with different columns")
        _check_invariants(raw)
        return raw

    bindings = bindings or ColumnBindings()
    columns = {str(k): list(raw[k]) for k in raw}
    roles = (bindings.time, bindings.event, bindings.treatment)
    if len(set(roles)) != 3:
        raise BindingError("time, event and treatment must be distinct columns",
                           columns=list(roles))
    for name in roles:
        if name not in columns:
            raise BindingError(f"column {name!r} not found", column=name)
    if bindings.covariates is None:
        cov_names = [c for c in columns if c not in roles]
    else:
        cov_names = list(bindings.covariates)
        if len(set(cov_names)) != len(cov_names):
            raise BindingError("duplicate covariate names", columns=cov_names)
        for name in cov_names:
            if name not in columns:
                raise BindingError(f"column {name!r} not found", column=name)
            if name in roles:
                raise BindingError(f"column {name!r} bound twice", column=name)

    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise ValidationError("table is not rectangular", lengths=sorted(lengths))
    nrow = lengths.pop() if lengths else 0

    bound = list(roles) + cov_names
    keep = [i for i in range(nrow) if not any(is_missing(columns[c][i]) for c in bound)]
    dropped = nrow - len(keep)

    time = np.empty(len(keep))
    for j, i in enumerate(keep):
        v = columns[bindings.time][i]
        try:
            t = float(v)
        except (TypeError, ValueError):
            raise ValidationError(f"non-numeric time in row {i}", row=i, value=str(v)) from None
        if not math.isfinite(t) or t <= 0:
            raise ValidationError(f"time must be finite and > 0 (row {i})", row=i, value=t)
        time[j] = t

    event = np.empty(len(keep), dtype=np.int64)
    for j, i in enumerate(keep):
        v = columns[bindings.event][i]
        try:
            e = float(v)
        except (TypeError, ValueError):
            e = float("nan")
        if e not in (0.0, 1.0):
            raise ValidationError(f"event must be 0 or 1 (row {i})", row=i, value=str(v))
        event[j] = int(e)

    treatment = np.array([label(columns[bindings.treatment][i]) for i in keep], dtype=object)
    if len(set(treatment.tolist())) < 2:
        raise ValidationError("treatment needs at least 2 observed levels",
                              levels=sorted(set(treatment.tolist())))

    covariates: dict[str, np.ndarray] = {}
    kinds: dict[str, str] = {}
    for name in cov_names:
        values = [columns[name][i] for i in keep]
        if all(_is_number(v) for v in values):
            covariates[name] = np.asarray(values, dtype=float)
            kinds[name] = "numeric"
        else:
            covariates[name] = np.array([label(v) for v in values], dtype=object)
            kinds[name] = "categorical"

    ds = SurvDataset(time=time, event=event, treatment=treatment,
                     covariates=covariates, kinds=kinds, bindings=bindings,
                     dropped_rows=dropped)
    _check_invariants(ds)
    return ds


def _check_invariants(ds: SurvDataset) -> None:
    if not (np.all(np.isfinite(ds.time)) and np.all(ds.time > 0)):
        raise ValidationError("time must be finite and > 0")
    if not np.all((ds.event == 0) | (ds.event == 1)):
        raise ValidationError("event must be 0 or 1")
    if len(ds.levels) < 2:
        raise ValidationError("treatment needs at least 2 observed levels")


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Numeric model matrix with labelled columns.

    ``terms`` records, per formula term, either ``None`` (numeric) or the
    tuple of non-reference levels, so the same coding can be re-applied.
    """

    values: np.ndarray
    column_names: tuple[str, ...]
    terms: tuple[tuple[str, tuple[str, ...] | None], ...] = ()
    intercept: bool = True

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.n


def parse_formula(formula: str) -> list[str]:
    """Split an additive formula into term names.

    An optional left-hand side (``z ~ a + b``) is ignored. The single token
    ``1`` denotes an intercept-only model and yields no terms.
    """
    if formula is None or not formula.strip():
        raise ParseError("empty formula", formula=formula)
    rhs = formula.split("~", 1)[1] if "~" in formula else formula
    tokens = [tok.strip() for tok in rhs.split("+")]
    if any(not tok for tok in tokens):
        raise ParseError("empty term in formula", formula=formula)
    if tokens == ["1"]:
        return []
    terms = [tok for tok in tokens if tok != "1"]
    seen = set()
    for tok in terms:
        if tok in seen:
            raise ParseError(f"duplicate term {tok!r}", token=tok, formula=formula)
        seen.add(tok)
    return terms


def expand_design(data: SurvDataset, formula: str, intercept: bool = True) -> DesignMatrix:
    """Expand an additive formula into a :class:`DesignMatrix`.

    Column order is the intercept (if requested) then terms in formula order.
    Categorical terms get one indicator per level except the
    lexicographically smallest, which is the reference.
    """
    terms = parse_formula(formula)
    for tok in terms:
        if tok not in data.covariates:
            raise ParseError(f"unknown covariate {tok!r}", token=tok, formula=formula)

    coding = []
    for tok in terms:
        if data.kinds[tok] == "categorical":
            levels = sorted(set(data.covariates[tok].tolist()))
            coding.append((tok, tuple(levels[1:])))
        else:
            coding.append((tok, None))
    dm = apply_coding(data, tuple(coding), intercept)
    _check_columns(dm)
    return dm


def apply_coding(data: SurvDataset, terms, intercept: bool = True) -> DesignMatrix:
    """Build a design matrix from a fixed term coding (no level discovery)."""
    cols = []
    names = []
    if intercept:
        cols.append(np.ones(data.n))
        names.append("(intercept)")
    for tok, levels in terms:
        x = data.covariates[tok]
        if levels is None:
            cols.append(np.asarray(x, dtype=float))
            names.append(tok)
        else:
            for lev in levels:
                cols.append((x == lev).astype(float))
                names.append(f"{tok}={lev}")
    values = np.column_stack(cols) if cols else np.empty((data.n, 0))
    return DesignMatrix(values=values, column_names=tuple(names), terms=tuple(terms),
                        intercept=intercept)


def _check_columns(dm: DesignMatrix) -> None:
    start = 1 if dm.intercept else 0
    for j in range(start, dm.values.shape[1]):
        col = dm.values[:, j]
        if dm.n and np.all(col == col[0]):
            raise LinearAlgebraError(f"design column {dm.column_names[j]!r} is constant",
                                     column=dm.column_names[j])


def treatment_indicators(treatment: np.ndarray, levels: Sequence[str]) -> np.ndarray:
    """Reference-coded treatment indicators (first level is the reference)."""
    levels = list(levels)
    if len(levels) < 2:
        return np.empty((len(treatment), 0))
    return np.column_stack([(treatment == lev).astype(float) for lev in levels[1:]])
