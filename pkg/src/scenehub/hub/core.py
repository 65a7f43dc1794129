"""Central decision management: the event-sourced service core.

Every accepted message is appended to a gapless, append-only event log and
then folded into service state (agent table, missions, belief, keyword
stream). Hub-side derivations (a radiation reading crossing the evidence
threshold, a detection label mapping to an indicator variable) are recorded
as hub-emitted ``evidence`` envelopes in the same log, so a fresh hub that
replays the log arrives at the identical snapshot without re-deriving
anything.

All state mutation is serialized through one lock; snapshots are consistent
reads of the folded state.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .. import protocol
from ..geo import GeoPoint, from_enu, to_enu
from ..inference import BeliefState, Evidence, ThreatModel, most_probable, update
from ..planner import RegionError, SurveyRegion, discretize_region, plan_greedy_routes
from ..retrieval import Index, RankedDoc, expand_query, rank, tokenize
from ..world import validate_geo
from .config import HubConfig


class RejectedMessage(ValueError):
    """Message failed validation; carries every violation found."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class MissionError(ValueError):
    pass


class NoIdleAgentsError(MissionError):
    pass


@dataclass(frozen=True)
class EventRecord:
    seq: int
    ts: float
    envelope: protocol.Envelope


@dataclass(frozen=True)
class IngestResult:
    seq: int
    effects: tuple[str, ...]


@dataclass
class AgentInfo:
    agent_id: str
    position: dict
    battery_pct: float
    status: str
    radio_range_m: float
    last_seen_ts: float


@dataclass
class MissionRecord:
    mission_id: str
    state: str
    created_ts: float
    spacing_m: float
    corners: list[dict]
    routes: dict[str, list[dict]] = field(default_factory=dict)
    total_points: int = 0
    visited: set[tuple[int, int]] = field(default_factory=set)

    def progress_pct(self) -> float:
        if self.total_points == 0:
            return 0.0
        return 100.0 * len(self.visited) / self.total_points


class EventLog:
    """Append-only in-memory log with an optional NDJSON file sink."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[EventRecord] = []
        self._fh = open(path, "w", encoding="utf-8") if path else None

    def append(self, env: protocol.Envelope) -> int:
        seq = len(self.records) + 1
        self.records.append(EventRecord(seq=seq, ts=env.ts, envelope=env))
        if self._fh is not None:
            self._fh.write(protocol.encode(env).decode("utf-8") + "\n")
            self._fh.flush()
        return seq

    def since(self, seq: int) -> list[EventRecord]:
        return self.records[seq:]

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def load_event_log(path: str | Path) -> list[protocol.Envelope]:
    """Read an NDJSON event log back into envelopes."""
    envelopes = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                envelopes.append(protocol.decode(line))
    return envelopes


class Hub:
    """The service core; one instance per scene."""

    def __init__(
        self,
        model: ThreatModel,
        index: Index,
        synonyms: dict[str, list[tuple[str, float]]],
        config: HubConfig,
        origin: GeoPoint,
        background_dose_uSv_h: float = 0.0,
        route_dispatcher=None,
        log_path: str | Path | None = None,
        rng_seed: int = 0,
    ):
        self.model = model
        self.index = index
        self.synonyms = synonyms
        self.config = config
        self.origin = origin
        self.rad_threshold = config.rad_threshold_factor * background_dose_uSv_h
        self.route_dispatcher = route_dispatcher

        self._lock = threading.Lock()
        self._log = EventLog(log_path)
        self._agents: dict[str, AgentInfo] = {}
        self._missions: dict[str, MissionRecord] = {}
        self._belief = BeliefState(model=model)
        self._keywords: tuple[str, ...] = ()
        self._ranked: list[RankedDoc] = []
        self._rng = Random(rng_seed ^ 0x68756200)  # hub-lane stream, distinct from agents
        self.sim_time = 0.0

    # -- ingestion ------------------------------------------------------------

    def ingest(self, env: protocol.Envelope) -> IngestResult:
        """Validate, log, and fold one envelope; derived evidence is logged too.

        Raises :class:`RejectedMessage` (and logs nothing) when the envelope
        fails schema validation or names an evidence variable the model does
        not define.
        """
        violations = protocol.validate(env)
        if violations:
            raise RejectedMessage(violations)
        if env.type == "evidence" and env.body["variable"] not in self.model.cpts:
            raise RejectedMessage(
                [f"body.variable: {env.body['variable']!r} is not a model evidence variable"]
            )
        with self._lock:
            seq, effects = self._append_and_apply(env)
            effects = [f"logged:{seq}"] + effects
            effects += self._derive(env)
        return IngestResult(seq=seq, effects=tuple(effects))

    def _append_and_apply(self, env: protocol.Envelope) -> tuple[int, list[str]]:
        seq = self._log.append(env)
        self.sim_time = max(self.sim_time, float(env.ts))
        return seq, self._apply(env)

    def _apply(self, env: protocol.Envelope) -> list[str]:
        """The replayable fold: state change as a pure function of the envelope."""
        handler = getattr(self, f"_apply_{env.type}", None)
        if handler is None:
            return []
        return handler(env)

    def _apply_register(self, env: protocol.Envelope) -> list[str]:
        body = env.body
        self._agents[body["agent_id"]] = AgentInfo(
            agent_id=body["agent_id"],
            position=dict(body.get("position", {})),
            battery_pct=100.0,
            status="idle",
            radio_range_m=float(body.get("radio_range_m", 0.0)),
            last_seen_ts=float(env.ts),
        )
        return [f"agent_registered:{body['agent_id']}"]

    def _apply_heartbeat(self, env: protocol.Envelope) -> list[str]:
        info = self._agents.get(env.src)
        if info is None:
            return []
        info.position = dict(env.body["position"])
        info.battery_pct = float(env.body["battery_pct"])
        info.status = env.body["status"]
        info.last_seen_ts = float(env.ts)
        return [f"agent_updated:{env.src}"]

    def _apply_status(self, env: protocol.Envelope) -> list[str]:
        info = self._agents.get(env.src)
        if info is None:
            return []
        info.status = env.body["status"]
        if "battery_pct" in env.body:
            info.battery_pct = float(env.body["battery_pct"])
        info.last_seen_ts = float(env.ts)
        return [f"agent_status:{env.src}:{env.body['status']}"]

    def _apply_sensor_reading(self, env: protocol.Envelope) -> list[str]:
        effects: list[str] = []
        mission_id = env.body.get("mission_id")
        grid_index = env.body.get("grid_index")
        if mission_id and grid_index is not None:
            mission = self._missions.get(mission_id)
            if mission is not None and mission.state == "active":
                mission.visited.add(tuple(grid_index))
                effects.append(
                    f"coverage:{mission_id}:{len(mission.visited)}/{mission.total_points}"
                )
                if len(mission.visited) >= mission.total_points:
                    mission.state = "complete"
                    effects.append(f"mission_complete:{mission_id}")
        return effects

    def _apply_detection(self, env: protocol.Envelope) -> list[str]:
        terms = tokenize(env.body["label"])
        self._keywords = self._keywords + tuple(terms)
        self._ranked = rank(
            self.index,
            expand_query(list(self._keywords), self.synonyms),
            self.config.top_k_docs,
        )
        return [f"keywords_added:{'+'.join(terms)}", "reranked"]

    def _apply_route_assignment(self, env: protocol.Envelope) -> list[str]:
        body = env.body
        mission = self._missions.get(body["mission_id"])
        if mission is None:
            mission = MissionRecord(
                mission_id=body["mission_id"],
                state="active",
                created_ts=float(env.ts),
                spacing_m=float(body.get("spacing_m", 0.0)),
                corners=list(body.get("corners", [])),
            )
            self._missions[body["mission_id"]] = mission
        mission.routes[env.dst] = list(body["waypoints"])
        mission.total_points += len(body["waypoints"])
        mission.state = "active"
        agent = self._agents.get(env.dst)
        if agent is not None:
            agent.status = "enroute"
        if self.route_dispatcher is not None:
            self.route_dispatcher(env)
        return [f"route_assigned:{env.dst}:{len(body['waypoints'])}"]

    def _apply_evidence(self, env: protocol.Envelope) -> list[str]:
        ev = Evidence(
            variable=env.body["variable"],
            value=bool(env.body["value"]),
            region=env.body.get("region", ""),
            timestamp=float(env.ts),
        )
        self._belief = update(self._belief, ev)
        return [f"belief_updated:{ev.variable}={ev.value}"]

    # -- live-only derivation ---------------------------------------------------

    def _derive(self, env: protocol.Envelope) -> list[str]:
        """Turn raw messages into evidence envelopes (recorded in the log)."""
        effects: list[str] = []
        if env.type == "sensor_reading" and env.body["kind"] == "radiation_dose":
            if env.body["value"] > self.rad_threshold:
                var = (
                    self.config.rav_evidence_var
                    if env.src.startswith(self.config.rav_src_prefix)
                    else self.config.handheld_evidence_var
                )
                effects += self._emit_evidence(var, env)
        elif env.type == "detection":
            var = f"detector_label_{env.body['label']}"
            effects += self._emit_evidence(var, env)
        return effects

    def _emit_evidence(self, variable: str, cause: protocol.Envelope) -> list[str]:
        if variable not in self.model.cpts:
            return []
        body: dict = {"variable": variable, "value": True, "source": cause.src}
        grid_index = cause.body.get("grid_index")
        if grid_index is not None:
            body["region"] = f"cell-{grid_index[0]}-{grid_index[1]}"
        env = protocol.Envelope(
            msg_id=protocol.new_msg_id(self._rng),
            ts=self.sim_time,
            src="hub",
            dst="broadcast",
            type="evidence",
            body=body,
        )
        seq, effects = self._append_and_apply(env)
        return [f"evidence:{seq}:{variable}"] + effects

    # -- missions ----------------------------------------------------------------

    def create_mission(
        self, corners: list[GeoPoint], spacing_m: float, agent_ids: list[str],
        altitude_m: float | None = None,
    ) -> str:
        """Plan a survey over the rectangle and assign routes to idle agents.

        Discretizes the region, runs the greedy router from the agents'
        current positions, and appends one route_assignment per agent with a
        non-empty route. The mission becomes active immediately.
        """
        if len(corners) != 4:
            raise MissionError(f"expected exactly 4 corners, got {len(corners)}")
        for i, c in enumerate(corners):
            try:
                validate_geo(c, f"corners[{i}]")
            except ValueError as exc:
                raise MissionError(str(exc)) from None
        if spacing_m <= 0:
            raise MissionError(f"spacing_m must be > 0, got {spacing_m}")
        if not agent_ids:
            raise MissionError("at least one agent id is required")

        with self._lock:
            missing = sorted(set(agent_ids) - set(self._agents))
            if missing:
                raise MissionError(f"unknown agents {missing}")
            not_idle = sorted(a for a in agent_ids if self._agents[a].status != "idle")
            if not_idle:
                raise NoIdleAgentsError(
                    f"agents not idle: "
                    f"{[(a, self._agents[a].status) for a in not_idle]}"
                )

            region = SurveyRegion(
                corners=tuple(corners),
                spacing_m=spacing_m,
                altitude_m=self.config.mission_altitude_m if altitude_m is None else altitude_m,
            )
            try:
                points = discretize_region(region, self.origin)
            except RegionError as exc:
                raise MissionError(str(exc)) from None

            starts = []
            for agent_id in agent_ids:
                pos = self._agents[agent_id].position
                if "lat_deg" not in pos or "lon_deg" not in pos:
                    raise MissionError(f"agent {agent_id!r} has no known position yet")
                starts.append(
                    to_enu(self.origin, GeoPoint(pos["lat_deg"], pos["lon_deg"], pos.get("alt_m", 0.0)))
                )
            plan = plan_greedy_routes(points, starts)

            mission_id = f"m-{len(self._missions) + 1}"
            corner_bodies = [
                {"lat_deg": c.lat_deg, "lon_deg": c.lon_deg, "alt_m": c.alt_m} for c in corners
            ]
            for agent_id, route in zip(agent_ids, plan.routes):
                if not route:
                    continue
                waypoints = []
                for gp in route:
                    g = from_enu(self.origin, gp.position)
                    waypoints.append(
                        {
                            "lat_deg": g.lat_deg,
                            "lon_deg": g.lon_deg,
                            "alt_m": g.alt_m,
                            "grid_index": list(gp.index),
                        }
                    )
                env = protocol.Envelope(
                    msg_id=protocol.new_msg_id(self._rng),
                    ts=self.sim_time,
                    src="hub",
                    dst=agent_id,
                    type="route_assignment",
                    body={
                        "mission_id": mission_id,
                        "waypoints": waypoints,
                        "corners": corner_bodies,
                        "spacing_m": spacing_m,
                    },
                )
                self._append_and_apply(env)
            if mission_id not in self._missions:
                # Degenerate: a single grid point already covered by zero-length
                # routes cannot happen (every point is assigned), so reaching
                # here means no waypoints were produced at all.
                raise MissionError("mission produced no route assignments")
        return mission_id

    # -- queries ----------------------------------------------------------------

    def mission_view(self, mission_id: str) -> dict | None:
        with self._lock:
            mission = self._missions.get(mission_id)
            return None if mission is None else self._mission_dict(mission)

    def _mission_dict(self, mission: MissionRecord) -> dict:
        return {
            "mission_id": mission.mission_id,
            "state": mission.state,
            "created_ts": mission.created_ts,
            "spacing_m": mission.spacing_m,
            "corners": mission.corners,
            "routes": mission.routes,
            "total_points": mission.total_points,
            "visited_points": len(mission.visited),
            "progress_pct": mission.progress_pct(),
        }

    def agents_view(self) -> dict:
        with self._lock:
            return {
                agent_id: {
                    "agent_id": info.agent_id,
                    "position": dict(info.position),
                    "battery_pct": info.battery_pct,
                    "status": info.status,
                    "radio_range_m": info.radio_range_m,
                    "last_seen_ts": info.last_seen_ts,
                }
                for agent_id, info in sorted(self._agents.items())
            }

    def belief_view(self) -> dict:
        with self._lock:
            return self._belief_dict()

    def _belief_dict(self) -> dict:
        belief = self._belief.belief
        cat, sub = most_probable(belief)
        return {
            "categories": dict(belief.categories),
            "substances": dict(belief.substances),
            "evidence_count": belief.evidence_count,
            "log_likelihood": belief.log_likelihood,
            "most_probable": {"category": cat, "substance": sub},
        }

    def ranked_docs_view(self, k: int | None = None) -> list[dict]:
        with self._lock:
            return self._ranked_dicts(k)

    def _ranked_dicts(self, k: int | None = None) -> list[dict]:
        docs = self._ranked if k is None else self._ranked[:k]
        return [
            {
                "doc_id": d.doc_id,
                "title": self.index.titles.get(d.doc_id, d.doc_id),
                "score": d.score,
                "rank": d.rank,
            }
            for d in docs
        ]

    def events_since(self, seq: int) -> list[dict]:
        with self._lock:
            return [
                {"seq": rec.seq, "envelope": _envelope_dict(rec.envelope)}
                for rec in self._log.since(seq)
            ]

    @property
    def event_count(self) -> int:
        with self._lock:
            return len(self._log.records)

    def log_envelopes(self) -> list[protocol.Envelope]:
        with self._lock:
            return [rec.envelope for rec in self._log.records]

    def snapshot(self) -> dict:
        """Consistent view of the folded state; identical until a new event lands."""
        with self._lock:
            missions = sorted(self._missions.values(), key=lambda m: (m.created_ts, m.mission_id))
            current = missions[-1] if missions else None
            return {
                "agents": {
                    agent_id: {
                        "position": dict(info.position),
                        "battery_pct": info.battery_pct,
                        "status": info.status,
                        "last_seen_ts": info.last_seen_ts,
                    }
                    for agent_id, info in sorted(self._agents.items())
                },
                "mission": None if current is None else self._mission_dict(current),
                "belief": self._belief_dict(),
                "ranked_docs": self._ranked_dicts(),
                "keywords": list(self._keywords),
                "last_seq": len(self._log.records),
                "sim_time_s": self.sim_time,
            }

    # -- replay ------------------------------------------------------------------

    def replay(self, envelopes: list[protocol.Envelope]) -> None:
        """Fold an existing event log into this (fresh) hub verbatim.

        No derivation runs: derived evidence envelopes are already part of
        the log, so replaying reproduces the exact state the log's producer
        ended with.
        """
        with self._lock:
            if self._log.records:
                raise ValueError("replay requires a fresh hub with an empty log")
            for env in envelopes:
                self._append_and_apply(env)

    def close(self) -> None:
        self._log.close()


def _envelope_dict(env: protocol.Envelope) -> dict:
    return {
        "version": env.version,
        "msg_id": env.msg_id,
        "ts": env.ts,
        "src": env.src,
        "dst": env.dst,
        "type": env.type,
        "body": env.body,
    }
