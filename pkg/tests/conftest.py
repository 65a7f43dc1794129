from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(Path(__file__).resolve().parent))

from scenehub.geo import EnuPoint, GeoPoint  # noqa: E402
from scenehub.world import (  # noqa: E402
    GroundObject,
    HazardSource,
    SceneConfig,
    TerrainGrid,
    build_scene,
)

ORIGIN = GeoPoint(52.42, -7.71, 0.0)


def flat_terrain(width=4, height=4, cell=10.0, cls="grass", costs=None):
    return TerrainGrid(
        origin=ORIGIN,
        cell_size_m=cell,
        width_cells=width,
        height_cells=height,
        classes=tuple(tuple(cls for _ in range(width)) for _ in range(height)),
        class_costs=costs or {"grass": 1.0},
    )


def make_scene(sources=(), objects=(), background=0.0, terrain=None, veg=None):
    config = SceneConfig(
        origin=ORIGIN,
        sources=tuple(sources),
        objects=tuple(objects),
        terrain=terrain or flat_terrain(),
        background_dose_uSv_h=background,
        rng_seed=0,
        **({"veg_coupling": veg} if veg else {}),
    )
    return build_scene(config)


def rad_source(east, north, up=0.0, strength=100.0, substance="cs137"):
    return HazardSource(
        kind="radiological", position=EnuPoint(east, north, up),
        strength=strength, substance_id=substance,
    )


def chem_source(east, north, up=0.0, strength=100.0, substance="chlorine"):
    return HazardSource(
        kind="chemical", position=EnuPoint(east, north, up),
        strength=strength, substance_id=substance,
    )


def obj(id_, east, north, label="barrel", radius=1.0):
    return GroundObject(id=id_, class_label=label, position=EnuPoint(east, north, 0.0), radius_m=radius)


@pytest.fixture
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture
def rail_scenario_path() -> Path:
    return REPO_ROOT / "scenarios" / "rail_radiological.scenario"


# -- acceptance criterion reporting -------------------------------------------

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def record_acceptance(criterion: str, passed: bool = True) -> None:
    _ACCEPTANCE_RESULTS[criterion] = "PASS" if passed else "FAIL"


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call" and report.failed:
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE_RESULTS[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{_ACCEPTANCE_RESULTS[criterion]}  {criterion}")
