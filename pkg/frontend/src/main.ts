import { HubClient } from "./api.js";
import { emptyForm, validateForm, type MissionForm } from "./form.js";
import { buildMapModel, drawMap, pxToGeo } from "./map.js";
import { buildDetectionRows, buildDocRows, buildThreatBars } from "./panels.js";
import { SnapshotPoller, isStale } from "./state.js";
import type { ConsoleConfig, EventDto } from "./types.js";

/** DOM glue only: all logic lives in the pure modules this file imports. */

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

async function loadConfig(): Promise<ConsoleConfig> {
  try {
    const resp = await fetch("./console.config.json");
    if (resp.ok) return (await resp.json()) as ConsoleConfig;
  } catch {
    // fall through to defaults
  }
  return { hub_base_url: "http://127.0.0.1:8000", poll_interval_ms: 1000 };
}

function fmtScore(x: number): string {
  return x >= 100 ? x.toFixed(0) : x.toPrecision(3);
}

async function start(): Promise<void> {
  const config = await loadConfig();
  const client = new HubClient(config.hub_base_url);
  const form: MissionForm = emptyForm();
  let detectionEvents: EventDto[] = [];
  let eventsCursor = 0;
  let renderedEventSeq = -1;
  let inlineError = "";
  let lastMissionId = "";

  const canvas = $("map") as HTMLCanvasElement;

  const render = () => {
    const state = poller.state;
    const banner = $("connection");
    const stale = isStale(state, Date.now());
    banner.textContent =
      state.status === "connected" && !stale
        ? `connected - sim t=${state.snapshot?.sim_time_s.toFixed(0)}s, event #${state.snapshot?.last_seq}`
        : state.status === "connecting"
          ? "connecting…"
          : "disconnected - showing last known data";
    banner.className = state.status === "connected" && !stale ? "ok" : "bad";

    const snap = state.snapshot;
    if (!snap) return;

    // agent roster + checkboxes
    const roster = $("agents");
    roster.innerHTML = "";
    for (const [agentId, agent] of Object.entries(snap.agents).sort()) {
      const row = document.createElement("div");
      row.className = `agent ${agent.status}`;
      const checked = form.selectedAgents.includes(agentId) ? "checked" : "";
      row.innerHTML =
        `<label><input type="checkbox" data-agent="${agentId}" ${checked}> ${agentId}</label>` +
        `<span class="badge ${agent.status}">${agent.status}</span>` +
        `<span>${agent.battery_pct.toFixed(1)}%</span>`;
      roster.appendChild(row);
    }
    roster.querySelectorAll("input[data-agent]").forEach((el) => {
      el.addEventListener("change", (ev) => {
        const target = ev.target as HTMLInputElement;
        const id = target.dataset.agent!;
        form.selectedAgents = target.checked
          ? [...new Set([...form.selectedAgents, id])]
          : form.selectedAgents.filter((a) => a !== id);
        syncFormHint();
      });
    });

    // mission summary
    const missionBox = $("mission");
    if (snap.mission) {
      missionBox.innerHTML =
        `<span class="badge ${snap.mission.state}">${snap.mission.state}</span> ` +
        `${snap.mission.mission_id}: ${snap.mission.visited_points}/${snap.mission.total_points} ` +
        `points (${snap.mission.progress_pct.toFixed(0)}%)`;
    } else {
      missionBox.textContent = "no mission yet";
    }

    drawMap(canvas, buildMapModel(snap, detectionEvents));

    // threat panel
    const threats = $("threats");
    threats.innerHTML = "";
    for (const bar of buildThreatBars(snap.belief)) {
      const row = document.createElement("div");
      row.className = "threat-row" + (bar.highlight ? " highlight" : "");
      row.innerHTML =
        `<span class="cat">${bar.category}</span>` +
        `<span class="bar"><span style="width:${bar.pct.toFixed(1)}%"></span></span>` +
        `<span class="pct">${bar.pct.toFixed(1)}%</span>`;
      threats.appendChild(row);
    }
    $("threat-detail").textContent =
      `most probable: ${snap.belief.most_probable.category} / ${snap.belief.most_probable.substance}` +
      ` - ${snap.belief.evidence_count} evidence items`;

    // documents panel, re-rendered when the event seq moves
    if (snap.last_seq !== renderedEventSeq) {
      renderedEventSeq = snap.last_seq;
      const docs = $("documents");
      docs.innerHTML = "";
      const rows = buildDocRows(snap.ranked_docs);
      if (rows.length === 0) {
        docs.innerHTML = `<div class="empty">no matching documents yet</div>`;
      } else {
        for (const doc of rows) {
          const row = document.createElement("div");
          row.className = "doc-row";
          row.innerHTML =
            `<span class="rank">${doc.rank}</span><span class="title">${doc.title}</span>` +
            `<span class="score">${fmtScore(doc.score)}</span>`;
          docs.appendChild(row);
        }
      }
    }

    // detections list
    const detections = $("detections");
    detections.innerHTML = "";
    const rows = buildDetectionRows(detectionEvents);
    if (rows.length === 0) {
      detections.innerHTML = `<div class="empty">no detections yet</div>`;
    }
    for (const det of rows) {
      const row = document.createElement("div");
      row.className = "det-row";
      row.innerHTML =
        `<span>#${det.seq}</span><span>${det.label}</span>` +
        `<span>${(det.confidence * 100).toFixed(0)}%</span><span>${det.agent}</span>`;
      detections.appendChild(row);
    }

    $("form-error").textContent = inlineError;
  };

  const poller = new SnapshotPoller(
    async () => {
      const snap = await client.getSnapshot();
      if (snap.last_seq > eventsCursor) {
        const tail = await client.getEvents(eventsCursor);
        eventsCursor = snap.last_seq;
        detectionEvents = [...detectionEvents, ...tail.filter((e) => e.envelope.type === "detection")].slice(-200);
      }
      return snap;
    },
    config.poll_interval_ms,
    render,
  );

  // mission form wiring
  const syncFormHint = () => {
    const check = validateForm(form);
    const button = $("submit") as HTMLButtonElement;
    button.disabled = !check.ok;
    $("form-hint").textContent = check.ok
      ? `ready - spacing ${form.spacing} m, ${form.selectedAgents.length} agent(s)`
      : check.hint;
  };

  document.querySelectorAll<HTMLInputElement>("input[data-corner]").forEach((el) => {
    el.addEventListener("input", () => {
      const [idx, axis] = el.dataset.corner!.split(":");
      form.corners[Number(idx)][axis as "lat" | "lon"] = el.value;
      syncFormHint();
    });
  });

  // clicking the map fills the next empty corner
  canvas.addEventListener("click", (ev) => {
    const snap = poller.state.snapshot;
    if (!snap) return;
    const slot = form.corners.findIndex((c) => c.lat.trim() === "" && c.lon.trim() === "");
    if (slot === -1) return;
    const rect = canvas.getBoundingClientRect();
    const px = {
      x: ((ev.clientX - rect.left) * canvas.width) / rect.width,
      y: ((ev.clientY - rect.top) * canvas.height) / rect.height,
    };
    const geo = pxToGeo(buildMapModel(snap, detectionEvents), canvas.width, canvas.height, px);
    if (!geo) return;
    form.corners[slot] = { lat: geo.lat_deg.toFixed(6), lon: geo.lon_deg.toFixed(6) };
    const latInput = document.querySelector<HTMLInputElement>(`input[data-corner="${slot}:lat"]`);
    const lonInput = document.querySelector<HTMLInputElement>(`input[data-corner="${slot}:lon"]`);
    if (latInput) latInput.value = form.corners[slot].lat;
    if (lonInput) lonInput.value = form.corners[slot].lon;
    syncFormHint();
  });
  ($("spacing") as HTMLInputElement).addEventListener("input", (ev) => {
    form.spacing = (ev.target as HTMLInputElement).value;
    syncFormHint();
  });

  $("submit").addEventListener("click", async () => {
    const check = validateForm(form);
    if (!check.ok) return;
    inlineError = "";
    const resp = await client.postMission(check.request);
    if (resp.status === 201 && resp.missionId) {
      lastMissionId = resp.missionId;
      $("form-hint").textContent = `mission ${lastMissionId} created`;
      poller.requestNow(); // draw the routes as soon as the hub has them
    } else {
      inlineError = resp.error ?? "mission rejected";
      render();
    }
  });

  syncFormHint();
  poller.start();
}

start().catch((err) => {
  const banner = document.getElementById("connection");
  if (banner) {
    banner.textContent = `console failed to start: ${err}`;
    banner.className = "bad";
  }
});
