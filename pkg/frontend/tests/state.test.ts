import { describe, expect, it } from "vitest";

import {
  BACKOFF_CAP_MS,
  SnapshotPoller,
  applyFailure,
  applySnapshot,
  initialState,
  isStale,
  nextDelayMs,
} from "../src/state.js";
import type { SnapshotDto } from "../src/types.js";

const SNAP: SnapshotDto = {
  agents: {},
  mission: null,
  belief: {
    categories: { chemical: 0.25, biological: 0.25, radiological: 0.25, none: 0.25 },
    substances: {},
    evidence_count: 0,
    log_likelihood: 0,
    most_probable: { category: "chemical", substance: "chlorine" },
  },
  ranked_docs: [],
  keywords: [],
  last_seq: 0,
  sim_time_s: 0,
};

describe("console state", () => {
  it("fresh snapshot marks connected and resets failures", () => {
    let state = initialState(1000);
    state = applyFailure(applyFailure(state));
    state = applySnapshot(state, SNAP, 5000);
    expect(state.status).toBe("connected");
    expect(state.consecutiveFailures).toBe(0);
    expect(state.snapshot).toBe(SNAP);
  });

  it("failure flips to disconnected but keeps stale data", () => {
    let state = applySnapshot(initialState(1000), SNAP, 1000);
    state = applyFailure(state);
    expect(state.status).toBe("disconnected");
    expect(state.snapshot).toBe(SNAP);
  });

  it("backoff doubles per failure and caps at 10s", () => {
    let state = initialState(1000);
    expect(nextDelayMs(state)).toBe(1000);
    const delays: number[] = [];
    for (let i = 0; i < 7; i++) {
      state = applyFailure(state);
      delays.push(nextDelayMs(state));
    }
    expect(delays).toEqual([1000, 2000, 4000, 8000, 10_000, 10_000, 10_000]);
    expect(Math.max(...delays)).toBe(BACKOFF_CAP_MS);
  });

  it("data older than two intervals is stale", () => {
    const state = applySnapshot(initialState(1000), SNAP, 10_000);
    expect(isStale(state, 11_999)).toBe(false);
    expect(isStale(state, 12_000)).toBe(false);
    expect(isStale(state, 12_001)).toBe(true);
  });
});

describe("snapshot poller", () => {
  it("keeps at most one request in flight and coalesces extras", async () => {
    let started = 0;
    let release: (() => void) | null = null;
    const fetchSnapshot = () =>
      new Promise<SnapshotDto>((resolve) => {
        started += 1;
        release = () => resolve(SNAP);
      });

    const poller = new SnapshotPoller(fetchSnapshot, 50);
    const first = poller.pollOnce();
    expect(started).toBe(1);
    // three extra requests while the first hangs: all coalesce into one
    poller.requestNow();
    poller.requestNow();
    poller.requestNow();
    expect(started).toBe(1);
    release!();
    await first;
    await new Promise((r) => setTimeout(r, 5));
    expect(started).toBe(2); // exactly one trailing poll
    release!();
    poller.stop();
  });

  it("reports failures through onChange without dropping the old snapshot", async () => {
    let calls = 0;
    const poller = new SnapshotPoller(
      async () => {
        calls += 1;
        if (calls === 1) return SNAP;
        throw new Error("hub down");
      },
      10,
    );
    await poller.pollOnce();
    expect(poller.state.status).toBe("connected");
    poller.stop();
    await poller.pollOnce();
    expect(poller.state.status).toBe("disconnected");
    expect(poller.state.snapshot).toBe(SNAP);
    poller.stop();
  });
});
