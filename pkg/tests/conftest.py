import pytest

# criterion label -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): one numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    label = marker.args[0]
    detail = ACCEPTANCE.get(label, (None, ""))[1]
    if rep.failed and not detail and hasattr(rep.longrepr, "reprcrash"):
        detail = str(rep.longrepr.reprcrash.message).splitlines()[0]
    ACCEPTANCE[label] = (rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")

    def key(label):
        head = label.split()[0]
        num = "".join(ch for ch in head if ch.isdigit())
        return (int(num) if num else 99, label)

    for label in sorted(ACCEPTANCE, key=key):
        ok, detail = ACCEPTANCE[label]
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
