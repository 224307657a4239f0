from pathlib import Path

import pytest

from mapkit.lang import parse_instance, parse_mapping

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)


def load_map(name: str):
    return parse_mapping((FIXTURES / f"{name}.map").read_text())


def inst(spec_or_schema, text: str):
    """Parse an instance body given the schema it is over."""
    from mapkit.core import Schema

    schemas = (spec_or_schema,) if isinstance(spec_or_schema, Schema) else (spec_or_schema.source, spec_or_schema.target)
    return parse_instance(text, schemas)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok, took, note = results[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status} ({took:.1f}s) {title}" + (f": {note}" if note else ""))
