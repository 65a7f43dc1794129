"""Ground-truth model of the incident scene.

The scene is a deterministic, immutable data model: point hazard sources with
inverse-square fields, placed ground objects, and a semantic terrain grid.
There is no atmosphere or plume physics; the field model is a synthetic
stand-in chosen for testability, not a physical simulation. All sensor noise
lives in the swarm, never here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .geo import EnuPoint, GeoPoint, distance, is_finite, to_enu

HAZARD_KINDS = ("radiological", "chemical", "biological")

TERRAIN_CLASSES = ("road", "grass", "water", "rail", "rubble")

# Single-char codes used by scenario files for terrain rows.
TERRAIN_CODES = {"R": "road", "G": "grass", "W": "water", "L": "rail", "U": "rubble"}

DEFAULT_OBJECT_CLASSES = ("barrel", "rail_car", "debris", "casualty_mannequin")

# Substance ids the scene model accepts, and the hazard kind each belongs to.
# Kept in sync with the default threat model catalog.
SUBSTANCE_KINDS = {
    "cs137": "radiological",
    "co60": "radiological",
    "ir192": "radiological",
    "chlorine": "chemical",
    "sarin": "chemical",
    "mustard_agent": "chemical",
    "anthrax": "biological",
    "ricin": "biological",
}

# Sources closer than this are treated as being at this distance, so field
# values stay finite at the source itself.
D_MIN_M = 1.0

IMPASSABLE = math.inf


class ConfigError(ValueError):
    """Invalid scene configuration; the message names the offending field."""


class OutOfBoundsError(ValueError):
    """Query point outside the terrain grid extent."""


@dataclass(frozen=True)
class HazardSource:
    kind: str
    position: EnuPoint
    strength: float  # radiological: uSv*m^2/h, chemical: concentration*m^2, biological: unitless
    substance_id: str


@dataclass(frozen=True)
class GroundObject:
    id: str
    class_label: str
    position: EnuPoint
    radius_m: float


@dataclass(frozen=True)
class TerrainGrid:
    """Row-major semantic grid; row 0 / col 0 is the south-west corner."""

    origin: GeoPoint
    cell_size_m: float
    width_cells: int
    height_cells: int
    classes: tuple[tuple[str, ...], ...]  # classes[row][col]
    class_costs: dict[str, float] = field(default_factory=dict)

    def cost_of(self, terrain_class: str) -> float:
        cost = self.class_costs.get(terrain_class)
        return IMPASSABLE if cost is None else cost


@dataclass(frozen=True)
class SceneConfig:
    origin: GeoPoint
    sources: tuple[HazardSource, ...]
    objects: tuple[GroundObject, ...]
    terrain: TerrainGrid
    background_dose_uSv_h: float
    rng_seed: int
    # Per-kind coupling from hazard strength to vegetation damage.
    veg_coupling: dict[str, float] = field(
        default_factory=lambda: {"radiological": 0.05, "chemical": 0.05}
    )
    object_classes: tuple[str, ...] = DEFAULT_OBJECT_CLASSES


@dataclass(frozen=True)
class Scene:
    """Validated, immutable scene; safe for concurrent reads."""

    origin: GeoPoint
    sources: tuple[HazardSource, ...]
    objects: tuple[GroundObject, ...]
    terrain: TerrainGrid
    background_dose_uSv_h: float
    rng_seed: int
    veg_coupling: dict[str, float]
    terrain_origin_enu: EnuPoint


def _require(cond: bool, field_name: str, problem: str) -> None:
    if not cond:
        raise ConfigError(f"{field_name}: {problem}")


def validate_geo(p: GeoPoint, field_name: str) -> None:
    _require(-90.0 <= p.lat_deg <= 90.0, f"{field_name}.lat_deg", f"{p.lat_deg} outside [-90, 90]")
    _require(-180.0 <= p.lon_deg <= 180.0, f"{field_name}.lon_deg", f"{p.lon_deg} outside [-180, 180]")
    _require(p.alt_m >= 0.0, f"{field_name}.alt_m", f"{p.alt_m} below the scene datum")


def build_scene(config: SceneConfig) -> Scene:
    """Validate ``config`` and return an immutable scene.

    Identical configs yield identical scenes. Raises :class:`ConfigError`
    naming the offending field on any invariant violation.
    """
    validate_geo(config.origin, "origin")
    _require(config.background_dose_uSv_h >= 0.0, "background_dose_uSv_h", "must be >= 0")

    for i, src in enumerate(config.sources):
        where = f"sources[{i}]"
        _require(src.kind in HAZARD_KINDS, f"{where}.kind", f"unknown hazard kind {src.kind!r}")
        _require(src.strength > 0.0, f"{where}.strength", "must be > 0")
        _require(is_finite(src.position), f"{where}.position", "must be finite")
        catalog_kind = SUBSTANCE_KINDS.get(src.substance_id)
        _require(
            catalog_kind is not None,
            f"{where}.substance_id",
            f"{src.substance_id!r} not in the substance catalog",
        )
        _require(
            catalog_kind == src.kind,
            f"{where}.substance_id",
            f"{src.substance_id!r} is a {catalog_kind} substance but the source kind is {src.kind!r}",
        )

    seen_ids: set[str] = set()
    for i, obj in enumerate(config.objects):
        where = f"objects[{i}]"
        _require(obj.id not in seen_ids, f"{where}.id", f"duplicate object id {obj.id!r}")
        seen_ids.add(obj.id)
        _require(
            obj.class_label in config.object_classes,
            f"{where}.class_label",
            f"{obj.class_label!r} not in the configured label set",
        )
        _require(obj.radius_m > 0.0, f"{where}.radius_m", "must be > 0")
        _require(is_finite(obj.position), f"{where}.position", "must be finite")

    t = config.terrain
    validate_geo(t.origin, "terrain.origin")
    _require(t.cell_size_m > 0.0, "terrain.cell_size_m", "must be > 0")
    _require(t.width_cells >= 1, "terrain.width_cells", "must be >= 1")
    _require(t.height_cells >= 1, "terrain.height_cells", "must be >= 1")
    _require(
        len(t.classes) == t.height_cells,
        "terrain.cells",
        f"expected {t.height_cells} rows, got {len(t.classes)}",
    )
    for r, row in enumerate(t.classes):
        _require(
            len(row) == t.width_cells,
            f"terrain.cells[{r}]",
            f"expected {t.width_cells} cols, got {len(row)}",
        )
        for c, cls in enumerate(row):
            _require(
                cls in TERRAIN_CLASSES,
                f"terrain.cells[{r}][{c}]",
                f"unknown terrain class {cls!r}",
            )
    for cls, cost in t.class_costs.items():
        _require(cls in TERRAIN_CLASSES, "terrain.class_costs", f"unknown terrain class {cls!r}")
        _require(
            cost == IMPASSABLE or cost > 0.0,
            f"terrain.class_costs.{cls}",
            "cost must be > 0 or the impassable sentinel",
        )

    for kind, k in config.veg_coupling.items():
        _require(kind in HAZARD_KINDS, "veg_coupling", f"unknown hazard kind {kind!r}")
        _require(k >= 0.0, f"veg_coupling.{kind}", "must be >= 0")

    return Scene(
        origin=config.origin,
        sources=tuple(config.sources),
        objects=tuple(config.objects),
        terrain=t,
        background_dose_uSv_h=config.background_dose_uSv_h,
        rng_seed=config.rng_seed,
        veg_coupling=dict(config.veg_coupling),
        terrain_origin_enu=to_enu(config.origin, t.origin),
    )


def _source_contribution(strength: float, src_pos: EnuPoint, p: EnuPoint) -> float:
    d = distance(src_pos, p)
    return strength / max(d * d, D_MIN_M * D_MIN_M)


def radiation_at(scene: Scene, p: EnuPoint) -> float:
    """Noiseless dose rate in uSv/h: background plus inverse-square sources."""
    dose = scene.background_dose_uSv_h
    for src in scene.sources:
        if src.kind == "radiological":
            dose += _source_contribution(src.strength, src.position, p)
    return dose


def vegetation_damage_at(scene: Scene, p: EnuPoint) -> float:
    """Vegetation damage level in [0, 1] from radiological and chemical sources."""
    total = 0.0
    for src in scene.sources:
        k = scene.veg_coupling.get(src.kind, 0.0)
        if src.kind in ("radiological", "chemical") and k > 0.0:
            total += k * _source_contribution(src.strength, src.position, p)
    return min(1.0, max(0.0, total))


def objects_in_footprint(scene: Scene, center: EnuPoint, half_width_m: float) -> list[GroundObject]:
    """Objects inside the closed axis-aligned square of side 2*half_width_m."""
    if half_width_m <= 0.0:
        raise ValueError("half_width_m must be > 0")
    hits = [
        obj
        for obj in scene.objects
        if abs(obj.position.east_m - center.east_m) <= half_width_m
        and abs(obj.position.north_m - center.north_m) <= half_width_m
    ]
    return sorted(hits, key=lambda o: o.id)


def _cell_index(coord: float, cell_size: float) -> int:
    # Floor rule; a point exactly on a shared cell edge belongs to the
    # lower-index cell (except the zero edge, which has no lower neighbor).
    q = coord / cell_size
    idx = math.floor(q)
    if idx > 0 and q == idx:
        idx -= 1
    return idx


def terrain_cell_of(scene: Scene, p: EnuPoint) -> tuple[int, int]:
    """(row, col) of the terrain cell containing ``p``; raises if outside."""
    t = scene.terrain
    east = p.east_m - scene.terrain_origin_enu.east_m
    north = p.north_m - scene.terrain_origin_enu.north_m
    col = _cell_index(east, t.cell_size_m)
    row = _cell_index(north, t.cell_size_m)
    if not (0 <= row < t.height_cells and 0 <= col < t.width_cells):
        raise OutOfBoundsError(
            f"point (east={p.east_m}, north={p.north_m}) outside terrain extent "
            f"{t.width_cells}x{t.height_cells} cells of {t.cell_size_m} m"
        )
    return row, col


def terrain_class_at(scene: Scene, p: EnuPoint) -> tuple[str, float]:
    """Terrain class and traversal cost of the cell containing ``p``."""
    row, col = terrain_cell_of(scene, p)
    cls = scene.terrain.classes[row][col]
    return cls, scene.terrain.cost_of(cls)


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------

_GEO_FIELDS = {"lat_deg", "lon_deg", "alt_m"}
_ENU_FIELDS = {"east_m", "north_m", "up_m"}


def _check_fields(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {unknown}")
    missing = sorted(required - set(obj))
    if missing:
        raise ConfigError(f"{where}: missing required fields {missing}")


def _parse_geo(obj: dict, where: str) -> GeoPoint:
    _check_fields(obj, _GEO_FIELDS, {"lat_deg", "lon_deg"}, where)
    return GeoPoint(float(obj["lat_deg"]), float(obj["lon_deg"]), float(obj.get("alt_m", 0.0)))


def _parse_enu(obj: dict, where: str) -> EnuPoint:
    _check_fields(obj, _ENU_FIELDS, {"east_m", "north_m"}, where)
    return EnuPoint(float(obj["east_m"]), float(obj["north_m"]), float(obj.get("up_m", 0.0)))


def _parse_terrain(obj: dict) -> TerrainGrid:
    _check_fields(
        obj,
        {"origin", "cell_size_m", "width_cells", "height_cells", "class_costs", "cells"},
        {"origin", "cell_size_m", "width_cells", "height_cells", "class_costs", "cells"},
        "terrain",
    )
    rows = []
    for r, row in enumerate(obj["cells"]):
        if not isinstance(row, str):
            raise ConfigError(f"terrain.cells[{r}]: expected a row string of cell codes")
        try:
            rows.append(tuple(TERRAIN_CODES[ch] for ch in row))
        except KeyError as exc:
            raise ConfigError(
                f"terrain.cells[{r}]: unknown cell code {exc.args[0]!r} "
                f"(known: {sorted(TERRAIN_CODES)})"
            ) from None
    costs = {}
    for cls, cost in obj["class_costs"].items():
        costs[cls] = IMPASSABLE if cost is None else float(cost)
    return TerrainGrid(
        origin=_parse_geo(obj["origin"], "terrain.origin"),
        cell_size_m=float(obj["cell_size_m"]),
        width_cells=int(obj["width_cells"]),
        height_cells=int(obj["height_cells"]),
        classes=tuple(rows),
        class_costs=costs,
    )


def parse_scene_config(data: dict) -> SceneConfig:
    """Parse a scenario document; unknown fields are rejected, listed by name."""
    allowed = {
        "origin",
        "sources",
        "objects",
        "terrain",
        "background_dose_uSv_h",
        "rng_seed",
        "veg_coupling",
        "object_classes",
    }
    required = {"origin", "sources", "objects", "terrain", "background_dose_uSv_h", "rng_seed"}
    _check_fields(data, allowed, required, "scenario")

    sources = []
    for i, s in enumerate(data["sources"]):
        where = f"sources[{i}]"
        _check_fields(s, {"kind", "position", "strength", "substance_id"},
                      {"kind", "position", "strength", "substance_id"}, where)
        sources.append(
            HazardSource(
                kind=s["kind"],
                position=_parse_enu(s["position"], f"{where}.position"),
                strength=float(s["strength"]),
                substance_id=s["substance_id"],
            )
        )

    objects = []
    for i, o in enumerate(data["objects"]):
        where = f"objects[{i}]"
        _check_fields(o, {"id", "class_label", "position", "radius_m"},
                      {"id", "class_label", "position", "radius_m"}, where)
        objects.append(
            GroundObject(
                id=str(o["id"]),
                class_label=o["class_label"],
                position=_parse_enu(o["position"], f"{where}.position"),
                radius_m=float(o["radius_m"]),
            )
        )

    kwargs: dict = {}
    if "veg_coupling" in data:
        kwargs["veg_coupling"] = {k: float(v) for k, v in data["veg_coupling"].items()}
    if "object_classes" in data:
        kwargs["object_classes"] = tuple(data["object_classes"])

    return SceneConfig(
        origin=_parse_geo(data["origin"], "origin"),
        sources=tuple(sources),
        objects=tuple(objects),
        terrain=_parse_terrain(data["terrain"]),
        background_dose_uSv_h=float(data["background_dose_uSv_h"]),
        rng_seed=int(data["rng_seed"]),
        **kwargs,
    )


def load_scene_config(path: str | Path) -> SceneConfig:
    """Load and parse a UTF-8 JSON scenario file."""
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigError("scenario: top-level document must be a JSON object")
    return parse_scene_config(data)
