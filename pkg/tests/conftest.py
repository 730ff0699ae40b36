"""Shared fixtures: the expensive flip-graph censuses are computed once per
session and reused by the unit and acceptance suites.  Each census records
its own wall-clock build time so runtime criteria can be asserted without
recomputing."""

from __future__ import annotations

import time
from dataclasses import dataclass

import pytest

from dominotwist.moves import ComponentReport, flip_components
from dominotwist.regions import make_box, make_cylinder


@dataclass
class TimedCensus:
    report: ComponentReport
    elapsed: float

    def sizes_twists(self) -> list[tuple[int, int]]:
        return [(c.size, c.twist) for c in self.report.components]


def _timed_census(region) -> TimedCensus:
    t0 = time.perf_counter()
    report = flip_components(region)
    return TimedCensus(report, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def census_2222() -> TimedCensus:
    return _timed_census(make_box((2, 2, 2, 2)))


@pytest.fixture(scope="session")
def census_222_n3() -> TimedCensus:
    return _timed_census(make_cylinder(make_box((2, 2, 2)), 3))


@pytest.fixture(scope="session")
def census_222_n4() -> TimedCensus:
    return _timed_census(make_cylinder(make_box((2, 2, 2)), 4))


@pytest.fixture(scope="session")
def census_223_n3() -> TimedCensus:
    return _timed_census(make_cylinder(make_box((2, 2, 3)), 3))
