import type { EventDto, GeoPointDto, MissionDto, SnapshotDto } from "./types.js";

export interface MissionRequest {
  corners: GeoPointDto[];
  spacing_m: number;
  agent_ids: string[];
}

export interface MissionResponse {
  status: number;
  missionId?: string;
  error?: string;
}

/** Thin typed client for the hub API; all console mutations go through
 *  postMission (the message endpoint is exposed for completeness). */
export class HubClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async getSnapshot(): Promise<SnapshotDto> {
    const resp = await fetch(this.url("/api/v1/snapshot"));
    if (!resp.ok) throw new Error(`snapshot: HTTP ${resp.status}`);
    return (await resp.json()) as SnapshotDto;
  }

  async getThreats(): Promise<SnapshotDto["belief"]> {
    const resp = await fetch(this.url("/api/v1/threats"));
    if (!resp.ok) throw new Error(`threats: HTTP ${resp.status}`);
    return await resp.json();
  }

  async getEvents(sinceSeq: number): Promise<EventDto[]> {
    const resp = await fetch(this.url(`/api/v1/events?since=${sinceSeq}`));
    if (!resp.ok) throw new Error(`events: HTTP ${resp.status}`);
    return (await resp.json()).events as EventDto[];
  }

  async getMission(missionId: string): Promise<MissionDto> {
    const resp = await fetch(this.url(`/api/v1/missions/${missionId}`));
    if (!resp.ok) throw new Error(`mission: HTTP ${resp.status}`);
    return (await resp.json()) as MissionDto;
  }

  async postMission(req: MissionRequest): Promise<MissionResponse> {
    const resp = await fetch(this.url("/api/v1/missions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    const body = await resp.json().catch(() => ({}));
    if (resp.status === 201) {
      return { status: resp.status, missionId: body.mission_id };
    }
    return { status: resp.status, error: body.error ?? `HTTP ${resp.status}` };
  }

  async postMessage(envelope: unknown): Promise<{ status: number; body: unknown }> {
    const resp = await fetch(this.url("/api/v1/messages"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(envelope),
    });
    return { status: resp.status, body: await resp.json().catch(() => ({})) };
  }
}
