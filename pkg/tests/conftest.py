import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per acceptance criterion."""

    def record(name: str, ok: bool, detail: str) -> None:
        _ACCEPTANCE[name] = (ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("-")[1])):
        ok, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}  {detail}")
