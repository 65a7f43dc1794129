"""Headless scenario runner: build scene and swarm, fly the mission, report.

This is the CI entry point behind ``hub run``: everything is driven by the
scenario file, the hub config, and one seed, so two runs with the same
inputs produce byte-identical event logs and reports.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from ..geo import EnuPoint, GeoPoint, from_enu
from ..inference import load_model
from ..retrieval import index_corpus, load_corpus, load_synonyms
from ..swarm import DEFAULT_DETECTOR, AgentState, Swarm, SwarmConfig
from ..world import Scene, build_scene, load_scene_config
from .config import HubConfig
from .core import Hub


class ScenarioError(ValueError):
    pass


DEFAULT_STEP_LIMIT = 100_000


@dataclass
class SimBundle:
    scene: Scene
    swarm: Swarm
    hub: Hub
    agent_ids: list[str]


def resolve_scenario_path(scenario: str | Path) -> Path:
    """The given path, or the same name under ``scenarios/`` as a fallback."""
    p = Path(scenario)
    if p.exists():
        return p
    fallback = Path("scenarios") / p.name
    if fallback.exists():
        return fallback
    raise ScenarioError(f"scenario file {scenario} does not exist")


def build_sim(
    scenario_path: str | Path,
    config: HubConfig,
    seed: int | None = None,
    log_path: str | Path | None = None,
) -> SimBundle:
    """Assemble scene, swarm, and hub for one scenario.

    ``seed`` overrides the scenario's own rng_seed when given; it drives the
    swarm's sensor/detector streams and all message ids.
    """
    scene_config = load_scene_config(resolve_scenario_path(scenario_path))
    if seed is not None:
        scene_config = dataclasses.replace(scene_config, rng_seed=seed)
    scene = build_scene(scene_config)

    try:
        model = load_model(config.model_path)
        docs = load_corpus(config.corpus_dir)
        synonyms = load_synonyms(config.synonyms_path)
    except FileNotFoundError as exc:
        raise ScenarioError(f"hub data file missing: {exc}") from exc
    index = index_corpus(docs)

    swarm_config = SwarmConfig(
        dt_s=config.dt_s,
        drain_rate_pct_s=config.drain_rate_pct_s,
        sensor_noise_rel=config.sensor_noise_rel,
        sensor_noise_floor=config.sensor_noise_floor,
        detector=dict(DEFAULT_DETECTOR) if config.detector is None else config.detector,
        footprint_half_width_m=config.footprint_half_width_m,
        heartbeat_interval_s=config.heartbeat_interval_s,
        radio_range_m=config.radio_range_m,
        rng_seed=scene.rng_seed,
    )
    agent_ids = [f"{config.rav_src_prefix}-{i + 1}" for i in range(config.agent_count)]
    agents = [
        AgentState(
            agent_id=agent_id,
            position=EnuPoint(0.0, 0.0, 0.0),
            speed_m_s=config.agent_speed_m_s,
            battery_pct=config.agent_battery_pct,
            radio_range_m=config.radio_range_m,
        )
        for agent_id in agent_ids
    ]
    swarm = Swarm(scene, swarm_config, agents)

    hub = Hub(
        model=model,
        index=index,
        synonyms=synonyms,
        config=config,
        origin=scene.origin,
        background_dose_uSv_h=scene.background_dose_uSv_h,
        route_dispatcher=swarm.deliver,
        log_path=log_path,
        rng_seed=scene.rng_seed,
    )
    for env in swarm.register_messages():
        hub.ingest(env)
    return SimBundle(scene=scene, swarm=swarm, hub=hub, agent_ids=agent_ids)


def default_mission_corners(scene: Scene, config: HubConfig) -> list[GeoPoint]:
    """Configured corners, else the terrain grid extent."""
    if config.mission_corners is not None:
        if len(config.mission_corners) != 4:
            raise ScenarioError("mission_corners must list exactly 4 corner points")
        return [
            GeoPoint(c["lat_deg"], c["lon_deg"], c.get("alt_m", 0.0))
            for c in config.mission_corners
        ]
    t = scene.terrain
    base = scene.terrain_origin_enu
    width = t.width_cells * t.cell_size_m
    height = t.height_cells * t.cell_size_m
    corners_enu = [
        EnuPoint(base.east_m, base.north_m, 0.0),
        EnuPoint(base.east_m + width, base.north_m, 0.0),
        EnuPoint(base.east_m + width, base.north_m + height, 0.0),
        EnuPoint(base.east_m, base.north_m + height, 0.0),
    ]
    return [from_enu(scene.origin, p) for p in corners_enu]


def step_until_done(bundle: SimBundle, mission_id: str, max_steps: int) -> int:
    """Advance the sim, routing deliverable messages into the hub.

    Stops when the mission completes or after ``max_steps``. Returns the
    number of steps executed.
    """
    steps = 0
    while steps < max_steps:
        messages = bundle.swarm.step()
        steps += 1
        hub_reach_cache: dict[str, bool] = {}
        for env in messages:
            reachable = hub_reach_cache.get(env.src)
            if reachable is None:
                reachable = "hub" in bundle.swarm.reachable_from(env.src)
                hub_reach_cache[env.src] = reachable
            if reachable:
                bundle.hub.ingest(env)
        mission = bundle.hub.mission_view(mission_id)
        if mission is not None and mission["state"] == "complete":
            break
    return steps


def run_headless(
    scenario_path: str | Path,
    steps: int = DEFAULT_STEP_LIMIT,
    seed: int | None = None,
    report_path: str | Path = "report.json",
    config: HubConfig | None = None,
) -> dict:
    """Run a scripted survey end to end; returns the report dict it wrote.

    Writes ``report.json`` plus a sibling ``<stem>.events.ndjson`` holding
    the full canonical event log.
    """
    config = config or HubConfig()
    report_path = Path(report_path)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    events_name = report_path.stem + ".events.ndjson"
    events_path = report_path.parent / events_name

    bundle = build_sim(scenario_path, config, seed=seed, log_path=events_path)
    corners = default_mission_corners(bundle.scene, config)
    mission_id = bundle.hub.create_mission(
        corners, config.mission_spacing_m, bundle.agent_ids,
        altitude_m=config.mission_altitude_m,
    )
    executed = step_until_done(bundle, mission_id, steps) if steps > 0 else 0

    snapshot = bundle.hub.snapshot()
    mission = snapshot["mission"]
    report = {
        "scenario": Path(scenario_path).stem,
        "seed": bundle.scene.rng_seed,
        "steps_executed": executed,
        "sim_time_s": snapshot["sim_time_s"],
        "mission_id": mission_id,
        "mission_state": mission["state"],
        "coverage_pct": mission["progress_pct"],
        "belief": snapshot["belief"],
        "ranked_docs": snapshot["ranked_docs"],
        "keywords": snapshot["keywords"],
        "event_count": snapshot["last_seq"],
        "event_log": events_name,
        # the full folded state, so a replayed log can be checked against the
        # exact snapshot this run ended with
        "final_snapshot": snapshot,
    }
    bundle.hub.close()
    with open(report_path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return report
