import type { EventDto, GeoPointDto, SnapshotDto } from "./types.js";

/** Top-down ENU map: scenes are local and synthetic, so the map is a plain
 *  meter-scaled canvas, not a tile map. The projection mirrors the hub's
 *  equirectangular convention so waypoints land exactly where it planned
 *  them. */

const M_PER_DEG_LAT = 111_320;

export interface XY {
  x: number; // east, meters
  y: number; // north, meters
}

export function enuOf(origin: GeoPointDto, p: GeoPointDto): XY {
  const cos = Math.cos((origin.lat_deg * Math.PI) / 180);
  return {
    x: (p.lon_deg - origin.lon_deg) * M_PER_DEG_LAT * cos,
    y: (p.lat_deg - origin.lat_deg) * M_PER_DEG_LAT,
  };
}

export interface RouteLine {
  agentId: string;
  color: string;
  points: XY[];
}

export interface AgentMarker {
  agentId: string;
  at: XY;
  status: string;
  batteryPct: number;
}

export interface DetectionPin {
  at: XY;
  label: string;
  confidence: number;
  captureId: string;
}

export interface MapModel {
  origin: GeoPointDto | null;
  routes: RouteLine[];
  agents: AgentMarker[];
  pins: DetectionPin[];
  cornersEnu: XY[];
  extent: { minX: number; minY: number; maxX: number; maxY: number };
}

export const AGENT_COLORS = ["#e4572e", "#2e86ab", "#3bb273", "#f4c20d", "#9b5de5"];

export function agentColor(index: number): string {
  return AGENT_COLORS[index % AGENT_COLORS.length];
}

/** Pick the map's local origin from whatever the snapshot shows first:
 *  mission corner 0, else the first agent. Purely presentational. */
export function mapOrigin(snapshot: SnapshotDto): GeoPointDto | null {
  if (snapshot.mission && snapshot.mission.corners.length > 0) {
    return snapshot.mission.corners[0];
  }
  const agents = Object.values(snapshot.agents);
  return agents.length > 0 ? agents[0].position : null;
}

/** Everything the canvas needs, as plain data. Detections come from the
 *  event log tail (the snapshot itself carries only aggregates). */
export function buildMapModel(snapshot: SnapshotDto, detectionEvents: EventDto[]): MapModel {
  const origin = mapOrigin(snapshot);
  const model: MapModel = {
    origin,
    routes: [],
    agents: [],
    pins: [],
    cornersEnu: [],
    extent: { minX: 0, minY: 0, maxX: 0, maxY: 0 },
  };
  if (origin === null) return model;

  if (snapshot.mission) {
    const agentIds = Object.keys(snapshot.mission.routes).sort();
    agentIds.forEach((agentId, i) => {
      model.routes.push({
        agentId,
        color: agentColor(i),
        points: snapshot.mission!.routes[agentId].map((wp) => enuOf(origin, wp)),
      });
    });
    model.cornersEnu = snapshot.mission.corners.map((c) => enuOf(origin, c));
  }

  for (const [agentId, agent] of Object.entries(snapshot.agents).sort()) {
    model.agents.push({
      agentId,
      at: enuOf(origin, agent.position),
      status: agent.status,
      batteryPct: agent.battery_pct,
    });
  }

  for (const event of detectionEvents) {
    if (event.envelope.type !== "detection") continue;
    const body = event.envelope.body as {
      geo_position?: { east_m: number; north_m: number };
      label?: string;
      confidence?: number;
      capture_id?: string;
    };
    if (!body.geo_position) continue;
    model.pins.push({
      at: { x: body.geo_position.east_m, y: body.geo_position.north_m },
      label: body.label ?? "?",
      confidence: body.confidence ?? 0,
      captureId: body.capture_id ?? "",
    });
  }

  const xs: number[] = [];
  const ys: number[] = [];
  for (const line of model.routes) for (const p of line.points) { xs.push(p.x); ys.push(p.y); }
  for (const a of model.agents) { xs.push(a.at.x); ys.push(a.at.y); }
  for (const p of model.pins) { xs.push(p.at.x); ys.push(p.at.y); }
  for (const c of model.cornersEnu) { xs.push(c.x); ys.push(c.y); }
  if (xs.length > 0) {
    model.extent = {
      minX: Math.min(...xs), minY: Math.min(...ys),
      maxX: Math.max(...xs), maxY: Math.max(...ys),
    };
  }
  return model;
}

export interface MapTransform {
  toPx(p: XY): XY;
  fromPx(px: XY): XY;
}

/** Pixel transform fitting the model extent into the canvas, north up.
 *  Invertible so map clicks translate back into scene coordinates. */
export function computeTransform(model: MapModel, width: number, height: number): MapTransform {
  const pad = 28;
  const spanX = Math.max(model.extent.maxX - model.extent.minX, 1);
  const spanY = Math.max(model.extent.maxY - model.extent.minY, 1);
  const scale = Math.min((width - 2 * pad) / spanX, (height - 2 * pad) / spanY);
  return {
    toPx: (p: XY) => ({
      x: pad + (p.x - model.extent.minX) * scale,
      y: height - pad - (p.y - model.extent.minY) * scale,
    }),
    fromPx: (px: XY) => ({
      x: model.extent.minX + (px.x - pad) / scale,
      y: model.extent.minY + (height - pad - px.y) / scale,
    }),
  };
}

/** Scene coordinates of a canvas click, as lat/lon for the mission form. */
export function pxToGeo(model: MapModel, width: number, height: number, px: XY): GeoPointDto | null {
  if (model.origin === null) return null;
  const enu = computeTransform(model, width, height).fromPx(px);
  const cos = Math.cos((model.origin.lat_deg * Math.PI) / 180);
  return {
    lat_deg: model.origin.lat_deg + enu.y / M_PER_DEG_LAT,
    lon_deg: model.origin.lon_deg + enu.x / (M_PER_DEG_LAT * cos),
    alt_m: 0,
  };
}

/** Render the model onto a canvas (north up). Kept separate from the model
 *  builder so tests can check geometry without a DOM. */
export function drawMap(canvas: HTMLCanvasElement, model: MapModel): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, width, height);

  const { toPx } = computeTransform(model, width, height);

  if (model.cornersEnu.length === 4) {
    ctx.strokeStyle = "#3a4757";
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    model.cornersEnu.forEach((c, i) => {
      const px = toPx(c);
      if (i === 0) ctx.moveTo(px.x, px.y);
      else ctx.lineTo(px.x, px.y);
    });
    ctx.closePath();
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const line of model.routes) {
    ctx.strokeStyle = line.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    line.points.forEach((p, i) => {
      const px = toPx(p);
      if (i === 0) ctx.moveTo(px.x, px.y);
      else ctx.lineTo(px.x, px.y);
    });
    ctx.stroke();
    for (const p of line.points) {
      const px = toPx(p);
      ctx.fillStyle = line.color;
      ctx.fillRect(px.x - 1.5, px.y - 1.5, 3, 3);
    }
  }

  for (const pin of model.pins) {
    const px = toPx(pin.at);
    ctx.fillStyle = "#ffd166";
    ctx.beginPath();
    ctx.arc(px.x, px.y, 4, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#dce3ec";
    ctx.font = "10px sans-serif";
    ctx.fillText(`${pin.label} ${(pin.confidence * 100).toFixed(0)}%`, px.x + 6, px.y + 3);
  }

  for (const [i, agent] of model.agents.entries()) {
    const px = toPx(agent.at);
    ctx.fillStyle = agent.status === "failed" ? "#d62246" : agentColor(i);
    ctx.beginPath();
    ctx.moveTo(px.x, px.y - 6);
    ctx.lineTo(px.x + 5, px.y + 4);
    ctx.lineTo(px.x - 5, px.y + 4);
    ctx.closePath();
    ctx.fill();
    ctx.fillStyle = "#dce3ec";
    ctx.font = "11px sans-serif";
    ctx.fillText(agent.agentId, px.x + 7, px.y + 4);
  }
}
