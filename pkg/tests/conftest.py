import pytest

from ducg.generators import compact_fixture, fig18_fixture

COMPACT_VALUE = 7.939915e-2


@pytest.fixture(scope="session")
def compact():
    return compact_fixture()


@pytest.fixture(scope="session")
def fig18():
    return fig18_fixture(seed=5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
