"""Shared test fixtures: the specification corpus and cached analyses."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
if str(TESTS) not in sys.path:
    sys.path.insert(0, str(TESTS))

# Specifications whose analysis must be clean (warnings allowed).
CORPUS = [
    "altitude.rill",
    "geofence_fixed.rill",
    "geofence_pasted.rill",
    "geofence_lag1.rill",
    "geofence_lag2.rill",
    "multifreq.rill",
    "kitchen.rill",
    "counts.rill",
    "cycle_offset.rill",
]

# (specification, trace) pairs that execute without faults.
RUNNABLE = [
    ("altitude.rill", "altitude.csv"),
    ("geofence_fixed.rill", "geofence.csv"),
    ("geofence_pasted.rill", "geofence.csv"),
    ("geofence_lag1.rill", "geofence_steps.csv"),
    ("geofence_lag2.rill", "geofence_steps.csv"),
    ("multifreq.rill", "multifreq.csv"),
    ("kitchen.rill", "kitchen.csv"),
    ("counts.rill", "counts.csv"),
]


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


@pytest.fixture(scope="session")
def reports():
    """name -> clean AnalysisReport for every corpus specification."""
    from rill.analysis import run_all

    out = {}
    for name in CORPUS:
        rep = run_all(fixture_text(name))
        assert rep.ok, (name, [d.code for d in rep.diagnostics])
        out[name] = rep
    return out


@pytest.fixture(scope="session")
def programs(reports):
    """name -> lowered MirSpec for every corpus specification."""
    from rill import mir as mirmod

    return {name: mirmod.lower(rep) for name, rep in reports.items()}
