/** Wire shapes served by the hub HTTP API. The console renders these
 *  verbatim: posteriors, scores, and progress are never recomputed here. */

export interface GeoPointDto {
  lat_deg: number;
  lon_deg: number;
  alt_m?: number;
}

export interface WaypointDto extends GeoPointDto {
  grid_index: [number, number];
}

export interface MissionDto {
  mission_id: string;
  state: string;
  created_ts: number;
  spacing_m: number;
  corners: GeoPointDto[];
  routes: Record<string, WaypointDto[]>;
  total_points: number;
  visited_points: number;
  progress_pct: number;
}

export interface AgentDto {
  position: GeoPointDto;
  battery_pct: number;
  status: string;
  last_seen_ts: number;
}

export interface BeliefDto {
  categories: Record<string, number>;
  substances: Record<string, number>;
  evidence_count: number;
  log_likelihood: number;
  most_probable: { category: string; substance: string };
}

export interface RankedDocDto {
  doc_id: string;
  title: string;
  score: number;
  rank: number;
}

export interface SnapshotDto {
  agents: Record<string, AgentDto>;
  mission: MissionDto | null;
  belief: BeliefDto;
  ranked_docs: RankedDocDto[];
  keywords: string[];
  last_seq: number;
  sim_time_s: number;
}

export interface EnvelopeDto {
  version: number;
  msg_id: string;
  ts: number;
  src: string;
  dst: string;
  type: string;
  body: Record<string, unknown>;
}

export interface EventDto {
  seq: number;
  envelope: EnvelopeDto;
}

export interface ConsoleConfig {
  hub_base_url: string;
  poll_interval_ms: number;
}
