import pytest

from hcrkit.imaging import GlyphGenConfig, generate_glyphs

_criteria = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(text): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _criteria.append((marker.args[0], rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for text, outcome in _criteria:
        flag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{flag}] {text}")


@pytest.fixture(scope="session")
def glyphs():
    """One clean rendering of every uppercase template."""
    return generate_glyphs(GlyphGenConfig(samples_per_class=1))
