"""Discrete-time simulation of the aerial survey swarm.

The stepper owns all agent state and is single-threaded; everything it emits
is an immutable protocol envelope, so other components only ever see
messages. Runs are bit-reproducible: each agent draws from its own RNG
stream seeded from the swarm seed mixed with the agent id, so adding an
agent never perturbs another agent's draws.

Sensor noise is multiplicative Gaussian; the camera is a confusion-matrix
detector standing in for a real segmentation network (labels and boxes only,
no masks). Noise and misdetection live here, never in the scene model.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from random import Random

from .geo import EnuPoint, GeoPoint, distance, from_enu, to_enu
from .protocol import IMAGE_FRAME_PX, Envelope, new_msg_id
from .world import Scene, objects_in_footprint, radiation_at

CONFUSION_ROW_TOL = 1e-9

CONFIDENCE_JITTER = 0.05

# Detection probability and label-confusion rows used when a scenario does
# not configure its own detector.
DEFAULT_DETECTOR = {
    "barrel": {"p_d": 0.9, "confusion": {"barrel": 0.9, "debris": 0.1}},
    "rail_car": {"p_d": 0.95, "confusion": {"rail_car": 0.95, "debris": 0.05}},
    "debris": {"p_d": 0.85, "confusion": {"debris": 0.85, "barrel": 0.15}},
    "casualty_mannequin": {"p_d": 0.95, "confusion": {"casualty_mannequin": 0.95, "debris": 0.05}},
}


class SwarmError(ValueError):
    pass


@dataclass(frozen=True)
class SwarmConfig:
    dt_s: float = 1.0
    drain_rate_pct_s: float = 0.01
    sensor_noise_rel: float = 0.05
    sensor_noise_floor: float = 0.0
    detector: dict[str, dict] = field(default_factory=lambda: dict(DEFAULT_DETECTOR))
    footprint_half_width_m: float = 15.0
    heartbeat_interval_s: float = 1.0
    radio_range_m: float = 5000.0
    hub_position: EnuPoint = EnuPoint(0.0, 0.0, 0.0)
    rng_seed: int = 0

    def validate(self) -> None:
        if self.dt_s <= 0.0:
            raise SwarmError(f"dt_s must be > 0, got {self.dt_s}")
        if self.footprint_half_width_m <= 0.0:
            raise SwarmError("footprint_half_width_m must be > 0")
        for label, spec_ in self.detector.items():
            p_d = spec_.get("p_d")
            if not 0.0 <= p_d <= 1.0:
                raise SwarmError(f"detector.{label}.p_d: {p_d} outside [0, 1]")
            row_sum = sum(spec_.get("confusion", {}).values())
            if abs(row_sum - 1.0) > CONFUSION_ROW_TOL:
                raise SwarmError(f"detector.{label}.confusion: row sums to {row_sum!r}, not 1")


@dataclass(frozen=True)
class Waypoint:
    grid_index: tuple[int, int]
    position: EnuPoint
    mission_id: str


@dataclass
class AgentState:
    agent_id: str
    position: EnuPoint
    speed_m_s: float = 10.0
    battery_pct: float = 100.0
    status: str = "idle"
    route: list[Waypoint] = field(default_factory=list)
    radio_range_m: float = 5000.0
    seq: int = 0
    captures: int = 0


@dataclass(frozen=True)
class SensorReading:
    agent_id: str
    position: EnuPoint
    kind: str
    value: float
    timestamp: float
    seq: int


@dataclass(frozen=True)
class Detection:
    capture_id: str
    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max in the image frame
    label: str
    confidence: float
    geo_position: EnuPoint


@dataclass(frozen=True)
class ImageCaptureMeta:
    capture_id: str
    agent_id: str
    position: EnuPoint
    footprint_half_width_m: float
    timestamp: float


def agent_stream_seed(swarm_seed: int, agent_id: str) -> int:
    """Stable per-agent RNG seed: swarm seed mixed with a digest of the agent id."""
    digest = hashlib.sha256(agent_id.encode("utf-8")).digest()
    return swarm_seed ^ int.from_bytes(digest[:8], "big")


def sample_radiation(
    scene: Scene, agent: AgentState, rng: Random, config: SwarmConfig, timestamp: float
) -> SensorReading:
    """One noisy dose-rate reading at the agent's position.

    value = max(0, true_dose * (1 + eps)), eps ~ Normal(0, sigma) with
    sigma = max(noise_floor, noise_rel); zero sigma consumes no draw.
    """
    if agent.status == "failed":
        raise SwarmError(f"agent {agent.agent_id} has failed; no readings")
    true_dose = radiation_at(scene, agent.position)
    sigma = max(config.sensor_noise_floor, config.sensor_noise_rel)
    eps = rng.gauss(0.0, sigma) if sigma > 0.0 else 0.0
    agent.seq += 1
    return SensorReading(
        agent_id=agent.agent_id,
        position=agent.position,
        kind="radiation_dose",
        value=max(0.0, true_dose * (1.0 + eps)),
        timestamp=timestamp,
        seq=agent.seq,
    )


def capture_image(
    scene: Scene, agent: AgentState, rng: Random, config: SwarmConfig, timestamp: float
) -> tuple[ImageCaptureMeta, list[Detection]]:
    """Simulated capture at the agent's footprint: misses, label confusion, boxes.

    Each in-footprint object is kept with its class detection probability;
    the emitted label is drawn from the class confusion row and the
    confidence is that row probability jittered by +-0.05, clamped to (0, 1].
    Boxes come from a linear map of the footprint square onto the image
    frame, north up.
    """
    hw = config.footprint_half_width_m
    agent.captures += 1
    capture_id = f"{agent.agent_id}-c{agent.captures}"
    meta = ImageCaptureMeta(
        capture_id=capture_id,
        agent_id=agent.agent_id,
        position=agent.position,
        footprint_half_width_m=hw,
        timestamp=timestamp,
    )
    scale = IMAGE_FRAME_PX / (2.0 * hw)
    detections = []
    for obj in objects_in_footprint(scene, agent.position, hw):
        spec_ = config.detector.get(obj.class_label)
        if spec_ is None:
            continue
        if rng.random() >= spec_["p_d"]:
            continue
        label, row_p = _draw_label(spec_["confusion"], rng)
        confidence = _clamp_confidence(row_p + rng.uniform(-CONFIDENCE_JITTER, CONFIDENCE_JITTER))
        cx = (obj.position.east_m - (agent.position.east_m - hw)) * scale
        cy = ((agent.position.north_m + hw) - obj.position.north_m) * scale
        r = obj.radius_m * scale
        detections.append(
            Detection(
                capture_id=capture_id,
                bbox=(
                    max(0.0, cx - r),
                    max(0.0, cy - r),
                    min(float(IMAGE_FRAME_PX), cx + r),
                    min(float(IMAGE_FRAME_PX), cy + r),
                ),
                label=label,
                confidence=confidence,
                geo_position=obj.position,
            )
        )
    return meta, detections


def _draw_label(confusion_row: dict[str, float], rng: Random) -> tuple[str, float]:
    r = rng.random()
    cum = 0.0
    labels = sorted(confusion_row)
    for label in labels:
        cum += confusion_row[label]
        if r < cum:
            return label, confusion_row[label]
    label = labels[-1]
    return label, confusion_row[label]


def _clamp_confidence(c: float) -> float:
    return min(1.0, max(1e-6, c))


@dataclass(frozen=True)
class DeliveryReport:
    msg_id: str
    recipients: tuple[str, ...]  # endpoint ids, "hub" included when reached


class Swarm:
    """Owns agent state and advances the simulation in fixed steps."""

    def __init__(self, scene: Scene, config: SwarmConfig, agents: list[AgentState]):
        config.validate()
        self.scene = scene
        self.config = config
        self.agents: dict[str, AgentState] = {}
        self.sim_time = 0.0
        self._rngs: dict[str, Random] = {}
        self._id_rngs: dict[str, Random] = {}
        self._since_heartbeat: dict[str, float] = {}
        self._delivered: dict[str, set[str]] = {}
        for agent in agents:
            if agent.agent_id in self.agents:
                raise SwarmError(f"duplicate agent id {agent.agent_id!r}")
            if agent.speed_m_s <= 0.0:
                raise SwarmError(f"{agent.agent_id}: speed_m_s must be > 0")
            if not 0.0 <= agent.battery_pct <= 100.0:
                raise SwarmError(f"{agent.agent_id}: battery_pct must be in [0, 100]")
            self.agents[agent.agent_id] = agent
            seed = agent_stream_seed(config.rng_seed, agent.agent_id)
            self._rngs[agent.agent_id] = Random(seed)
            # Separate stream for message ids so envelope identity never
            # perturbs sensor or detector draws.
            self._id_rngs[agent.agent_id] = Random(agent_stream_seed(config.rng_seed, agent.agent_id + "/msg"))
            self._since_heartbeat[agent.agent_id] = 0.0

    # -- message plumbing ---------------------------------------------------

    def _envelope(self, agent_id: str, type_: str, body: dict, dst: str = "hub") -> Envelope:
        return Envelope(
            msg_id=new_msg_id(self._id_rngs[agent_id]),
            ts=self.sim_time,
            src=agent_id,
            dst=dst,
            type=type_,
            body=body,
        )

    def _geo_body(self, p: EnuPoint) -> dict:
        g = from_enu(self.scene.origin, p)
        return {"lat_deg": g.lat_deg, "lon_deg": g.lon_deg, "alt_m": g.alt_m}

    def register_messages(self) -> list[Envelope]:
        """One register envelope per agent, for delivery to the hub at startup."""
        return [
            self._envelope(
                a.agent_id,
                "register",
                {
                    "agent_id": a.agent_id,
                    "radio_range_m": a.radio_range_m,
                    "position": self._geo_body(a.position),
                },
            )
            for a in self._sorted_agents()
        ]

    def deliver(self, msg: Envelope) -> None:
        """Hand a hub-originated envelope to its addressee (route assignments)."""
        if msg.type != "route_assignment":
            return
        agent = self.agents.get(msg.dst)
        if agent is None:
            raise SwarmError(f"route assignment addressed to unknown agent {msg.dst!r}")
        if agent.status == "failed":
            return
        waypoints = []
        for wp in msg.body["waypoints"]:
            enu = to_enu(self.scene.origin, GeoPoint(wp["lat_deg"], wp["lon_deg"], wp["alt_m"]))
            waypoints.append(
                Waypoint(
                    grid_index=tuple(wp["grid_index"]),
                    position=enu,
                    mission_id=msg.body["mission_id"],
                )
            )
        agent.route = waypoints
        agent.status = "enroute" if waypoints else "idle"

    def _sorted_agents(self) -> list[AgentState]:
        return [self.agents[k] for k in sorted(self.agents)]

    # -- stepping -----------------------------------------------------------

    def step(self, dt_s: float | None = None) -> list[Envelope]:
        """Advance every non-failed agent by one step and return emitted messages."""
        dt = self.config.dt_s if dt_s is None else dt_s
        if dt <= 0.0:
            raise SwarmError(f"dt must be > 0, got {dt}")
        self.sim_time += dt
        out: list[Envelope] = []
        for agent in self._sorted_agents():
            if agent.status == "failed":
                continue
            out.extend(self._step_agent(agent, dt))
        return out

    def _step_agent(self, agent: AgentState, dt: float) -> list[Envelope]:
        out: list[Envelope] = []
        arrived: Waypoint | None = None
        if agent.route:
            agent.status = "enroute"
            target = agent.route[0]
            gap = distance(agent.position, target.position)
            reach = agent.speed_m_s * dt
            if reach >= gap:
                agent.position = target.position
                arrived = agent.route.pop(0)
            else:
                f = reach / gap
                agent.position = EnuPoint(
                    agent.position.east_m + (target.position.east_m - agent.position.east_m) * f,
                    agent.position.north_m + (target.position.north_m - agent.position.north_m) * f,
                    agent.position.up_m + (target.position.up_m - agent.position.up_m) * f,
                )

        if arrived is not None:
            agent.status = "sensing"
            out.extend(self._waypoint_events(agent, arrived))
            if not agent.route:
                agent.status = "idle"

        agent.battery_pct = max(0.0, agent.battery_pct - self.config.drain_rate_pct_s * dt)
        if agent.battery_pct == 0.0:
            agent.status = "failed"
            out.append(
                self._envelope(
                    agent.agent_id, "status", {"status": "failed", "battery_pct": 0.0}
                )
            )
            return out

        self._since_heartbeat[agent.agent_id] += dt
        if self._since_heartbeat[agent.agent_id] >= self.config.heartbeat_interval_s:
            self._since_heartbeat[agent.agent_id] = 0.0
            out.append(
                self._envelope(
                    agent.agent_id,
                    "heartbeat",
                    {
                        "battery_pct": agent.battery_pct,
                        "position": self._geo_body(agent.position),
                        "status": agent.status,
                    },
                )
            )
        return out

    def _waypoint_events(self, agent: AgentState, wp: Waypoint) -> list[Envelope]:
        rng = self._rngs[agent.agent_id]
        reading = sample_radiation(self.scene, agent, rng, self.config, self.sim_time)
        meta, detections = capture_image(self.scene, agent, rng, self.config, self.sim_time)
        out = [
            self._envelope(
                agent.agent_id,
                "sensor_reading",
                {
                    "kind": reading.kind,
                    "value": reading.value,
                    "position": self._geo_body(reading.position),
                    "seq": reading.seq,
                    "mission_id": wp.mission_id,
                    "grid_index": list(wp.grid_index),
                },
            ),
            self._envelope(
                agent.agent_id,
                "image_meta",
                {
                    "capture_id": meta.capture_id,
                    "position": self._geo_body(meta.position),
                    "footprint_half_width_m": meta.footprint_half_width_m,
                    "detection_count": len(detections),
                    "mission_id": wp.mission_id,
                    "grid_index": list(wp.grid_index),
                },
            ),
        ]
        for det in detections:
            out.append(
                self._envelope(
                    agent.agent_id,
                    "detection",
                    {
                        "capture_id": det.capture_id,
                        "bbox": list(det.bbox),
                        "label": det.label,
                        "confidence": det.confidence,
                        "geo_position": {
                            "east_m": det.geo_position.east_m,
                            "north_m": det.geo_position.north_m,
                            "up_m": det.geo_position.up_m,
                        },
                    },
                )
            )
        return out

    # -- radio relay ----------------------------------------------------------

    def _link_nodes(self) -> dict[str, tuple[EnuPoint, float]]:
        nodes = {
            a.agent_id: (a.position, a.radio_range_m)
            for a in self.agents.values()
            if a.status != "failed"
        }
        nodes["hub"] = (self.config.hub_position, self.config.radio_range_m)
        return nodes

    def reachable_from(self, sender: str) -> set[str]:
        """Every endpoint a flood from ``sender`` can reach (sender excluded)."""
        nodes = self._link_nodes()
        if sender not in nodes:
            return set()
        frontier = [sender]
        seen = {sender}
        while frontier:
            u = frontier.pop()
            u_pos, u_range = nodes[u]
            for v, (v_pos, _) in nodes.items():
                if v not in seen and distance(u_pos, v_pos) <= u_range:
                    seen.add(v)
                    frontier.append(v)
        seen.discard(sender)
        return seen

    def relay_message(self, msg: Envelope, from_agent: str) -> DeliveryReport:
        """Flood ``msg`` from an agent; every reached endpoint gets it at most once.

        Direct neighbors receive in one hop; anything further (the hub
        included) is reached by agents re-broadcasting, de-duplicated by
        msg_id, so a message never arrives twice at the same endpoint.
        """
        if from_agent not in self.agents:
            raise SwarmError(f"unknown agent {from_agent!r}")
        reached = self.reachable_from(from_agent)
        already = self._delivered.setdefault(msg.msg_id, {msg.src, from_agent})
        new = tuple(sorted(reached - already))
        already.update(new)
        return DeliveryReport(msg_id=msg.msg_id, recipients=new)
