import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from adjsurv import ColumnBindings, validate_dataset
from adjsurv._backend import backends

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=sorted(backends()))
def kernels(request):
    return backends()[request.param]


@pytest.fixture
def toy():
    """Two events in group A, one event and one censoring in group B."""
    return validate_dataset({"time": [1, 2, 1, 3, 2], "event": [1, 1, 1, 0, 1],
                             "treatment": ["A", "A", "B", "B", "B"]})


def random_dataset(rng, n, n_cov=1, categorical=False):
    table = {"time": rng.integers(1, 8, n).astype(float), "event": rng.binomial(1, 0.7, n),
             "treatment": np.where(np.arange(n) % 2 == 0, "a", "b")}
    for j in range(n_cov):
        table[f"x{j}"] = rng.normal(size=n)
    if categorical:
        table["g"] = rng.choice(["u", "v", "w"], n)
    return validate_dataset(table, ColumnBindings(covariates=tuple(k for k in table if k.startswith("x") or k == "g")))


# acceptance verdicts, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
