from __future__ import annotations

from importlib import resources

import pytest

from celstream.events import load_schema, load_stream
from celstream.parser import parse_formula

DATA = resources.files("celstream").joinpath("data")


def data_text(name: str) -> str:
    return DATA.joinpath(name).read_text()


@pytest.fixture(scope="session")
def sensors_schema():
    return load_schema(data_text("sensors.schema"))


@pytest.fixture(scope="session")
def fig1(sensors_schema):
    return load_stream(str(DATA.joinpath("sensors.jsonl")), sensors_schema)


@pytest.fixture(scope="session")
def queries(sensors_schema):
    names = ("fire", "fire_any_order", "humidity_rise", "same_sensor", "conditional")
    return {n: parse_formula(data_text(f"{n}.cel"), sensors_schema) for n in names}


def ces(*sets):
    return {frozenset(s) for s in sets}


CRITERIA: list[str] = []


@pytest.fixture
def report_criterion():
    """Print a one-line verdict and keep it for the end-of-run summary."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        CRITERIA.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance")
        for line in sorted(CRITERIA, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
