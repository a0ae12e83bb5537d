import numpy as np
import pytest

from desmine import synthetic
from desmine.corpus import Dataset, Discussion


def make_dataset(texts, labels, name="toy"):
    return Dataset(name, tuple(
        Discussion(f"{name}-{i}", t, int(y), name, "other") for i, (t, y) in enumerate(zip(texts, labels))
    ))


@pytest.fixture(scope="session")
def suite():
    small = tuple(
        synthetic.Profile(p.name, p.artifact_kind, min(p.total, 400), max(40, p.design * min(p.total, 400) // p.total),
                          p.mean_length)
        for p in synthetic.PROFILES[:3]
    )
    return synthetic.make_suite(seed=0, profiles=small)


@pytest.fixture(scope="session")
def suite_dir(suite, tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    synthetic.write_suite(suite, out)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one verdict line per acceptance criterion, printed after the run
VERDICTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        terminalreporter.write_line(VERDICTS[n])
