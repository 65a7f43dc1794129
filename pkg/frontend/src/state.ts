import type { SnapshotDto } from "./types.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

/** What the console knows: the last snapshot plus connection bookkeeping.
 *  A failed poll never clears data; it only flips the status and grows the
 *  retry backoff (capped at BACKOFF_CAP_MS). */
export interface ConsoleState {
  snapshot: SnapshotDto | null;
  status: ConnectionStatus;
  lastSuccessMs: number | null;
  consecutiveFailures: number;
  pollIntervalMs: number;
}

export const BACKOFF_CAP_MS = 10_000;

export function initialState(pollIntervalMs: number): ConsoleState {
  return {
    snapshot: null,
    status: "connecting",
    lastSuccessMs: null,
    consecutiveFailures: 0,
    pollIntervalMs,
  };
}

export function applySnapshot(state: ConsoleState, snapshot: SnapshotDto, nowMs: number): ConsoleState {
  return {
    ...state,
    snapshot,
    status: "connected",
    lastSuccessMs: nowMs,
    consecutiveFailures: 0,
  };
}

export function applyFailure(state: ConsoleState): ConsoleState {
  return {
    ...state,
    status: "disconnected",
    consecutiveFailures: state.consecutiveFailures + 1,
  };
}

/** Delay until the next poll: the plain interval while connected, else an
 *  exponential backoff capped at 10 s. */
export function nextDelayMs(state: ConsoleState): number {
  if (state.consecutiveFailures === 0) return state.pollIntervalMs;
  const backoff = state.pollIntervalMs * 2 ** (state.consecutiveFailures - 1);
  return Math.min(backoff, BACKOFF_CAP_MS);
}

/** While connected, rendered data must never be older than two intervals. */
export function isStale(state: ConsoleState, nowMs: number): boolean {
  if (state.lastSuccessMs === null) return true;
  return nowMs - state.lastSuccessMs > 2 * state.pollIntervalMs;
}

export type FetchSnapshot = () => Promise<SnapshotDto>;

/** Single-threaded polling loop: at most one request in flight; a request
 *  made while one is pending coalesces into a single trailing poll. */
export class SnapshotPoller {
  state: ConsoleState;
  private inFlight = false;
  private pending = false;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    private readonly fetchSnapshot: FetchSnapshot,
    pollIntervalMs: number,
    private readonly onChange: (state: ConsoleState) => void = () => {},
    private readonly now: () => number = () => Date.now(),
  ) {
    this.state = initialState(pollIntervalMs);
  }

  start(): void {
    this.stopped = false;
    void this.pollOnce();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }

  /** Ask for a poll right now (e.g. straight after a mission submit). */
  requestNow(): void {
    if (this.inFlight) {
      this.pending = true;
      return;
    }
    if (this.timer !== null) clearTimeout(this.timer);
    void this.pollOnce();
  }

  get requestInFlight(): boolean {
    return this.inFlight;
  }

  async pollOnce(): Promise<void> {
    if (this.inFlight) {
      this.pending = true;
      return;
    }
    this.inFlight = true;
    try {
      const snapshot = await this.fetchSnapshot();
      this.state = applySnapshot(this.state, snapshot, this.now());
    } catch {
      this.state = applyFailure(this.state);
    } finally {
      this.inFlight = false;
    }
    this.onChange(this.state);
    if (this.stopped) return;
    if (this.pending) {
      this.pending = false;
      void this.pollOnce();
      return;
    }
    this.timer = setTimeout(() => void this.pollOnce(), nextDelayMs(this.state));
  }
}
