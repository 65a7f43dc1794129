import { type ChildProcess, spawn } from "node:child_process";
import net from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { HubClient } from "../src/api.js";
import { buildMapModel } from "../src/map.js";
import { buildThreatBars } from "../src/panels.js";
import { SnapshotPoller } from "../src/state.js";
import type { BeliefDto, EventDto, GeoPointDto } from "../src/types.js";

/** End-to-end: a real hub serving the radiological scenario, driven through
 *  the console's own client, state, and view-model code. */

const REPO_ROOT = path.resolve(path.dirname(fileURLToPath(import.meta.url)), "../..");
const POLL_MS = 500;

const ORIGIN = { lat: 52.42, lon: -7.71 };
const M_PER_DEG = 111320;

function cornerAt(eastM: number, northM: number): GeoPointDto {
  const cos = Math.cos((ORIGIN.lat * Math.PI) / 180);
  return {
    lat_deg: ORIGIN.lat + northM / M_PER_DEG,
    lon_deg: ORIGIN.lon + eastM / (M_PER_DEG * cos),
    alt_m: 0,
  };
}

// the shipped scenario's terrain extent: 20 x 12 cells of 10 m
const FIXTURE_RECT = [
  cornerAt(0, 0),
  cornerAt(200, 0),
  cornerAt(200, 120),
  cornerAt(0, 120),
];

async function freePort(): Promise<number> {
  return await new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address && typeof address === "object") {
        const port = address.port;
        srv.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

let hub: ChildProcess;
let client: HubClient;
let baseUrl: string;

beforeAll(async () => {
  const port = await freePort();
  baseUrl = `http://127.0.0.1:${port}`;
  hub = spawn(
    "python3",
    ["-m", "scenehub.hub.cli", "serve",
     "--scenario", "scenarios/rail_radiological.scenario",
     "--seed", "7", "--port", String(port)],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  hub.stderr?.on("data", () => {});
  client = new HubClient(baseUrl);

  let up = false;
  for (let i = 0; i < 60 && !up; i++) {
    await sleep(500);
    try {
      const snap = await client.getSnapshot();
      up = Object.keys(snap.agents).length >= 2;
    } catch {
      // still starting
    }
  }
  if (!up) throw new Error("hub never came up");
}, 45_000);

afterAll(async () => {
  hub?.kill("SIGTERM");
  await sleep(300);
  hub?.kill("SIGKILL");
});

describe("console against a live hub", () => {
  it("runs the full operator flow: dispatch, routes, evidence, threat shift", async () => {
    // --- mission submission: fixture rectangle -> 201 ---
    const agents = Object.keys((await client.getSnapshot()).agents).sort();
    expect(agents).toEqual(["rav-1", "rav-2"]);

    const baseline = await client.getThreats();
    for (const p of Object.values(baseline.categories)) {
      expect(p).toBeCloseTo(0.25, 9);
    }

    const resp = await client.postMission({
      corners: FIXTURE_RECT,
      spacing_m: 25,
      agent_ids: agents,
    });
    expect(resp.status).toBe(201);
    expect(resp.missionId).toBeTruthy();

    // --- routes rendered: the map model has a polyline per agent ---
    const poller = new SnapshotPoller(() => client.getSnapshot(), POLL_MS);
    await poller.pollOnce();
    poller.stop();
    const snap = poller.state.snapshot!;
    expect(snap.mission?.mission_id).toBe(resp.missionId);
    const model = buildMapModel(snap, []);
    expect(model.routes.map((r) => r.agentId)).toEqual(agents);
    for (const line of model.routes) {
      expect(line.points.length).toBeGreaterThan(0);
    }
    expect(
      model.routes.reduce((acc, line) => acc + line.points.length, 0),
    ).toBe(snap.mission!.total_points);

    // --- threat panel reflects a new value within 2 polling intervals of
    //     the evidence event appearing in /api/v1/events ---
    let cursor = snap.last_seq;
    let evidenceSeen: EventDto | null = null;
    let threatsAtEvidence: BeliefDto | null = null;
    const deadline = Date.now() + 60_000;
    while (Date.now() < deadline && !evidenceSeen) {
      await sleep(POLL_MS);
      const events = await client.getEvents(cursor);
      if (events.length > 0) cursor = events[events.length - 1].seq;
      evidenceSeen = events.find((e) => e.envelope.type === "evidence") ?? null;
    }
    expect(evidenceSeen, "no evidence event within a minute").not.toBeNull();

    // two polling intervals after the event surfaced
    let changed = false;
    for (let pollCount = 0; pollCount < 2 && !changed; pollCount++) {
      threatsAtEvidence = await client.getThreats();
      changed = Object.keys(baseline.categories).some(
        (c) => Math.abs(threatsAtEvidence!.categories[c] - baseline.categories[c]) > 1e-9,
      );
      if (!changed) await sleep(POLL_MS);
    }
    expect(changed, "threats unchanged 2 polls after evidence event").toBe(true);

    const bars = buildThreatBars(threatsAtEvidence!);
    const highlighted = bars.find((b) => b.highlight);
    expect(highlighted?.category).toBe("radiological");
    expect(bars.reduce((acc, b) => acc + b.pct, 0)).toBeCloseTo(100, 6);

    // --- the mission completes and the posterior stays radiological ---
    let progress = 0;
    const missionDeadline = Date.now() + 60_000;
    while (Date.now() < missionDeadline && progress < 100) {
      await sleep(POLL_MS);
      const s = await client.getSnapshot();
      progress = s.mission?.progress_pct ?? 0;
    }
    expect(progress).toBe(100);
    const final = await client.getSnapshot();
    expect(final.belief.most_probable.category).toBe("radiological");
    expect(final.ranked_docs.length).toBeGreaterThan(0);
  }, 150_000);
});
