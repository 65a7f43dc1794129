import type { BeliefDto, EventDto, RankedDocDto } from "./types.js";

/** View models for the decision panels. Pure projections of hub data:
 *  percentages are formatting, never re-inference. */

export interface ThreatBar {
  category: string;
  probability: number;
  pct: number; // probability * 100, for the bar width and label
  highlight: boolean;
}

export function buildThreatBars(belief: BeliefDto): ThreatBar[] {
  const order = ["chemical", "biological", "radiological", "none"];
  const categories = order.filter((c) => c in belief.categories);
  for (const extra of Object.keys(belief.categories).sort()) {
    if (!categories.includes(extra)) categories.push(extra);
  }
  return categories.map((category) => ({
    category,
    probability: belief.categories[category],
    pct: belief.categories[category] * 100,
    highlight: category === belief.most_probable.category,
  }));
}

export interface DocRow {
  rank: number;
  title: string;
  docId: string;
  score: number;
}

export function buildDocRows(ranked: RankedDocDto[]): DocRow[] {
  return ranked.map((d) => ({
    rank: d.rank,
    title: d.title,
    docId: d.doc_id,
    score: d.score,
  }));
}

export interface DetectionRow {
  seq: number;
  agent: string;
  label: string;
  confidence: number;
  captureId: string;
}

/** Latest-first detection list from the event log tail. */
export function buildDetectionRows(events: EventDto[], limit = 25): DetectionRow[] {
  const rows: DetectionRow[] = [];
  for (const event of events) {
    if (event.envelope.type !== "detection") continue;
    const body = event.envelope.body as {
      label?: string;
      confidence?: number;
      capture_id?: string;
    };
    rows.push({
      seq: event.seq,
      agent: event.envelope.src,
      label: body.label ?? "?",
      confidence: body.confidence ?? 0,
      captureId: body.capture_id ?? "",
    });
  }
  rows.sort((a, b) => b.seq - a.seq);
  return rows.slice(0, limit);
}
