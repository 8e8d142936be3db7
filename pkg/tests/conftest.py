import os

import pytest


def pytest_addoption(parser):
    parser.addoption("--fast", action="store_true", help="skip tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--fast"):
        skip = pytest.mark.skip(reason="--fast")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def uk_data_path():
    path = os.environ.get("NUINARCH_UK_DATA")
    if not path or not os.path.exists(path):
        pytest.skip("set NUINARCH_UK_DATA to the UK deaths CSV to run this check")
    return path


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then assert the condition."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def check(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
