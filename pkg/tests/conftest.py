import numpy as np
import pytest

from qemlab import catalog


@pytest.fixture(scope="session")
def example_a():
    return catalog.build("exampleA", {"p": 1, "q": 2, "m": 2})


@pytest.fixture(scope="session")
def example_a_points(example_a):
    return example_a.qe.g.chart.sample(20, 42)


def sample(entry, count=20, seed=42):
    return entry.qe.g.chart.sample(count, seed)


def suite_ids():
    return [f"{eid}[{','.join(f'{k}={v}' for k, v in p.items())}]" for eid, p in catalog.SUITE]


@pytest.fixture(scope="session")
def suite_entries():
    return [catalog.build(eid, p) for eid, p in catalog.SUITE]


def assert_close(a, b, tol):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    assert np.abs(a - b).max(initial=0.0) <= tol, (a, b)
