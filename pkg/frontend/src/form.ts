import type { GeoPointDto } from "./types.js";
import type { MissionRequest } from "./api.js";

/** Mission form: four corner inputs (typed or clicked), spacing, agents.
 *  Submission stays disabled, with a hint, until the form is complete. */

export interface CornerInput {
  lat: string;
  lon: string;
}

export interface MissionForm {
  corners: CornerInput[];
  spacing: string;
  selectedAgents: string[];
}

export function emptyForm(): MissionForm {
  return {
    corners: [
      { lat: "", lon: "" },
      { lat: "", lon: "" },
      { lat: "", lon: "" },
      { lat: "", lon: "" },
    ],
    spacing: "20",
    selectedAgents: [],
  };
}

export type FormCheck =
  | { ok: true; request: MissionRequest }
  | { ok: false; hint: string };

function parseCorner(c: CornerInput, index: number): GeoPointDto | string {
  const lat = Number(c.lat);
  const lon = Number(c.lon);
  if (c.lat.trim() === "" || c.lon.trim() === "" || !Number.isFinite(lat) || !Number.isFinite(lon)) {
    return `corner ${index + 1} needs numeric lat/lon`;
  }
  if (lat < -90 || lat > 90) return `corner ${index + 1}: latitude ${lat} outside [-90, 90]`;
  if (lon < -180 || lon > 180) return `corner ${index + 1}: longitude ${lon} outside [-180, 180]`;
  return { lat_deg: lat, lon_deg: lon, alt_m: 0 };
}

export function validateForm(form: MissionForm): FormCheck {
  const entered = form.corners.filter((c) => c.lat.trim() !== "" || c.lon.trim() !== "");
  if (entered.length < 4) {
    return { ok: false, hint: `${entered.length} of 4 corners entered` };
  }
  const corners: GeoPointDto[] = [];
  for (const [i, c] of form.corners.entries()) {
    const parsed = parseCorner(c, i);
    if (typeof parsed === "string") return { ok: false, hint: parsed };
    corners.push(parsed);
  }
  const spacing = Number(form.spacing);
  if (!Number.isFinite(spacing) || spacing <= 0) {
    return { ok: false, hint: "grid spacing must be a positive number of meters" };
  }
  if (form.selectedAgents.length === 0) {
    return { ok: false, hint: "select at least one agent" };
  }
  return {
    ok: true,
    request: { corners, spacing_m: spacing, agent_ids: [...form.selectedAgents] },
  };
}
