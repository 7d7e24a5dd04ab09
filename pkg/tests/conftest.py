import numpy as np
import pytest

from fcmppt.anfis import anfis_train
from fcmppt.converter import ConverterParams
from fcmppt.fuelcell import StackParams
from fcmppt.fuzzy import FuzzySystem
from fcmppt.ica import IcaConfig, ica_train
from fcmppt.oracle import generate_dataset, testing_grid, training_grid


@pytest.fixture(scope="session")
def stack():
    return StackParams()


@pytest.fixture(scope="session")
def conv():
    return ConverterParams()


@pytest.fixture(scope="session")
def fuzzy():
    return FuzzySystem.default()


@pytest.fixture(scope="session")
def datasets(stack):
    return generate_dataset(stack, *training_grid()), generate_dataset(stack, *testing_grid())


@pytest.fixture(scope="session")
def normalized(datasets):
    train, test = datasets
    x, y = train.normalized()
    xt, yt = test.normalized(train.norm)
    return x, y, xt, yt


@pytest.fixture(scope="session")
def anfis_fit(datasets, normalized):
    x, y, _, _ = normalized
    return anfis_train(x, y, 70, norm=datasets[0].norm)


@pytest.fixture(scope="session")
def ica_fit(datasets, normalized):
    x, y, _, _ = normalized
    return ica_train(IcaConfig(), x, y, norm=datasets[0].norm)


@pytest.fixture(scope="session")
def estimators(anfis_fit, ica_fit):
    return {"anfis": anfis_fit[0], "ica-nn": ica_fit.network}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for name, m in list(sys.modules.items())
                if name.rsplit(".", 1)[-1] == "test_acceptance"), None)
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
