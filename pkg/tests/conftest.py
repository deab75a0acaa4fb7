from __future__ import annotations

from pathlib import Path

import pytest

from summitnet.records import (
    ClimberRecord,
    ExpeditionRecord,
    Sex,
    link_and_validate,
    load_dataset,
)
from summitnet.synth import SynthConfig, generate

DATA = Path(__file__).parent / "data"


def make_expedition(eid, year=2020, peak="EVER", height=8849.0, days=30.0, camps=4, n_members=10, n_hired=5, death=False):
    return ExpeditionRecord(eid, peak, height, year, days, camps, n_members, n_hired, death)


def make_climber(cid, eid, age=35, sex=Sex.MALE, o2a=True, o2d=True, hired=False, summited=True, code=""):
    return ClimberRecord(cid, eid, age, sex, "USA", o2a, o2d, hired, summited, code)


def make_dataset(expeditions, climbers, code_map=None):
    return link_and_validate(expeditions, climbers, code_map)


@pytest.fixture
def fixture_paths():
    return DATA / "expeditions_fixture.csv", DATA / "members_fixture.csv"


@pytest.fixture
def fixture_dataset(fixture_paths):
    return load_dataset(*fixture_paths)


@pytest.fixture(scope="session")
def synth_output():
    return generate(SynthConfig(seed=0))


@pytest.fixture(scope="session")
def synth_files(synth_output, tmp_path_factory):
    return synth_output.write(tmp_path_factory.mktemp("synth"))


@pytest.fixture(scope="session")
def synth_report(synth_files, tmp_path_factory):
    from summitnet.pipeline import RunConfig, run

    out = tmp_path_factory.mktemp("report")
    cfg = RunConfig(expeditions=str(synth_files["expeditions"]), members=str(synth_files["members"]), output_dir=str(out))
    return run(cfg), out


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
