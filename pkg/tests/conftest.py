import functools

import pytest

from shnol import pipeline, scenarios

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


@functools.lru_cache(maxsize=None)
def prepared(name: str, mesh_scale: float = 1.0):
    return scenarios.prepare(scenarios.load_builtin(name), mesh_scale=mesh_scale)


@functools.lru_cache(maxsize=None)
def report(name: str, mesh_scale: float = 1.0):
    return pipeline.run_pipeline(prepared(name, mesh_scale), hardy=mesh_scale == 1.0)


@pytest.fixture
def record():
    def _record(k: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[k] = (bool(passed), detail)
        print(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
