import pytest

from faultsig.bundle import analyze
from faultsig.model import fixture_path, load_model


@pytest.fixture(scope="session")
def example1_bundle():
    return analyze(load_model(fixture_path("example1.model")))


@pytest.fixture(scope="session")
def watertank_bundle():
    return analyze(load_model(fixture_path("watertank.model")))


@pytest.fixture(scope="session")
def watertank_bundle_file(watertank_bundle, tmp_path_factory):
    path = tmp_path_factory.mktemp("bundle") / "watertank.bundle.json"
    watertank_bundle.save(path)
    return path


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str):
        ACCEPTANCE[number] = (passed, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
