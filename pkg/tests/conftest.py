import pytest

from granuprobe.harness import generate_catalog, generate_dataset


@pytest.fixture(scope="session")
def catalog():
    return generate_catalog(0)


@pytest.fixture(scope="session")
def dataset(catalog):
    return generate_dataset(catalog, seed=0)


def pytest_terminal_summary(terminalreporter):
    from .acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
