import numpy as np
import pytest
from hypothesis import given, strategies as st

from adjsurv import ColumnBindings, expand_design, parse_formula, validate_dataset
from adjsurv.data import label
from adjsurv.errors import BindingError, LinearAlgebraError, ParseError, ValidationError


def minimal():
    return {"time": [1, 2, 3, 4], "event": [1, 0, 1, 1], "treatment": ["A", "A", "B", "B"]}


def test_minimal_table_validates():
    ds = validate_dataset(minimal())
    assert ds.n == 4 and ds.levels == ("A", "B") and ds.dropped_rows == 0


def test_negative_time_cites_row():
    t = minimal()
    t["time"][1] = -1
    with pytest.raises(ValidationError) as err:
        validate_dataset(t)
    assert err.value.context["row"] == 1


def test_missing_covariate_dropped():
    t = minimal()
    t["age"] = [30, 40, None, 50]
    ds = validate_dataset(t)
    assert ds.n == 3 and ds.dropped_rows == 1


def test_missing_column_named():
    with pytest.raises(BindingError) as err:
        validate_dataset(minimal(), ColumnBindings(time="survtime"))
    assert err.value.context["column"] == "survtime"


def test_single_level_rejected():
    t = minimal()
    t["treatment"] = ["A"] * 4
    with pytest.raises(ValidationError):
        validate_dataset(t)


@pytest.mark.parametrize("bad", [[1, 2, 0, 1], [1, 0.5, 1, 1]])
def test_event_must_be_binary(bad):
    t = minimal()
    t["event"] = bad
    with pytest.raises(ValidationError):
        validate_dataset(t)


def test_idempotent():
    ds = validate_dataset(minimal())
    assert validate_dataset(ds) is ds
    assert validate_dataset(ds.to_table(), ds.bindings) == ds


def test_numeric_treatment_labels():
    assert label(1) == "1" and label(1.0) == "1" and label("x") == "x"


def test_design_numeric_and_categorical():
    t = minimal()
    t["age"] = [30.0, 41.0, 52.0, 60.0]
    t["grade"] = ["2", "3", "3", "2"]
    ds = validate_dataset(t)
    assert expand_design(ds, "age").column_names == ("(intercept)", "age")
    dm = expand_design(ds, "grade")
    assert dm.column_names == ("(intercept)", "grade=3")
    np.testing.assert_array_equal(dm.values[:, 1], [0, 1, 1, 0])


def test_unknown_token():
    t = minimal()
    t["age"] = [30.0, 41.0, 52.0, 60.0]
    with pytest.raises(ParseError) as err:
        expand_design(validate_dataset(t), "age + bogus")
    assert err.value.context["token"] == "bogus"


@pytest.mark.parametrize("formula", ["", "  ", "x + x", "x +"])
def test_bad_formulas(formula):
    with pytest.raises(ParseError):
        parse_formula(formula)


def test_intercept_only_formula():
    assert parse_formula("1") == []
    assert parse_formula("~ a + b") == ["a", "b"]


def test_constant_column_rejected():
    t = minimal()
    t["c"] = [1.0] * 4
    with pytest.raises(LinearAlgebraError):
        expand_design(validate_dataset(t), "c")


@given(st.permutations(list(range(8))))
def test_design_row_permutation(perm):
    rng = np.random.default_rng(0)
    t = {"time": rng.integers(1, 9, 8).astype(float), "event": [1, 0] * 4,
         "treatment": ["A", "B"] * 4, "x": rng.normal(size=8),
         "g": ["u", "v", "w", "u", "v", "w", "u", "v"]}
    ds = validate_dataset(t)
    perm = np.asarray(perm)
    shuffled = validate_dataset({k: np.asarray(v)[perm] for k, v in t.items()})
    np.testing.assert_array_equal(expand_design(ds, "x + g").values[perm],
                                  expand_design(shuffled, "x + g").values)
    # subsetting commutes with expansion while all levels stay observed
    np.testing.assert_array_equal(expand_design(ds, "x + g").values[perm],
                                  expand_design(ds.subset(perm), "x + g").values)
