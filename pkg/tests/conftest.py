from __future__ import annotations

from pathlib import Path

import pytest

from builders import FIXTURES


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def default_synth():
    from eventboot.synth import SynthSpec, generate

    return generate(SynthSpec())


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion's outcome for the end-of-run summary."""
    def report(name: str, ok: bool, detail: str) -> None:
        request.node.user_properties.append(("criterion", name))
        request.node.user_properties.append(("detail", detail))
        assert ok, f"{name}: {detail}"
    return report


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((rep.nodeid, "PASS" if outcome == "passed" else "FAIL", props["criterion"], props["detail"]))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, verdict, name, detail in sorted(lines):
            terminalreporter.write_line(f"{verdict}  {name}: {detail}")
