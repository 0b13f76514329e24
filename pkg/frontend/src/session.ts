// Frame-fetching session: one request in flight, newest pose wins, frames
// are never shown out of order. Network access is injected so the logic is
// testable without a browser.

import { Pose, beyondDeadband } from './pose';

export type RenderMode = 'composite' | 'falsecolor' | 'panels';

export interface Frame {
  blob: Blob;
  pose: Pose;
  mode: RenderMode;
  clamped: boolean;
  latencyMs: number;
  seq: number;
}

export interface FetchResult {
  blob: Blob;
  clamped: boolean;
}

export type FrameFetcher = (pose: Pose, mode: RenderMode) => Promise<FetchResult>;

export interface SessionOptions {
  deadband?: number;
  onFrame?: (frame: Frame) => void;
  onError?: (err: unknown) => void;
  now?: () => number;
}

/**
 * Serializes frame requests against a render service.
 *
 * - at most one request is in flight; while one is pending the latest
 *   requested pose is parked and issued when the response lands
 * - a response is dropped if a newer response has already been displayed
 * - poses inside the dead-band of the last *requested* pose are ignored
 */
export class SimSession {
  mode: RenderMode = 'composite';

  private fetcher: FrameFetcher;
  private deadband: number;
  private onFrame: (f: Frame) => void;
  private onError: (e: unknown) => void;
  private now: () => number;

  private inFlight = false;
  private pending: { pose: Pose; mode: RenderMode } | null = null;
  private lastRequested: Pose | null = null;
  private nextSeq = 0;
  private lastShownSeq = -1;

  requestsSent = 0;
  framesShown = 0;
  framesDropped = 0;

  constructor(fetcher: FrameFetcher, opts: SessionOptions = {}) {
    this.fetcher = fetcher;
    this.deadband = opts.deadband ?? 0.004;
    this.onFrame = opts.onFrame ?? (() => undefined);
    this.onError = opts.onError ?? (() => undefined);
    this.now = opts.now ?? (() => performance.now());
  }

  /** Request a frame for the pose; may coalesce with an in-flight request. */
  requestPose(pose: Pose, force = false): void {
    if (
      !force &&
      this.lastRequested &&
      !beyondDeadband(this.lastRequested, pose, this.deadband)
    ) {
      return;
    }
    if (this.inFlight) {
      this.pending = { pose, mode: this.mode }; // newest pose supersedes
      return;
    }
    void this.issue(pose, this.mode);
  }

  setMode(mode: RenderMode): void {
    if (mode === this.mode) return;
    this.mode = mode;
    const pose = this.lastRequested ?? { ax: 0, ay: 0 };
    if (this.inFlight) {
      this.pending = { pose, mode };
    } else {
      void this.issue(pose, mode);
    }
  }

  private async issue(pose: Pose, mode: RenderMode): Promise<void> {
    this.inFlight = true;
    this.lastRequested = pose;
    const seq = this.nextSeq++;
    const started = this.now();
    this.requestsSent++;
    try {
      const res = await this.fetcher(pose, mode);
      if (seq > this.lastShownSeq) {
        this.lastShownSeq = seq;
        this.framesShown++;
        this.onFrame({
          blob: res.blob,
          pose,
          mode,
          clamped: res.clamped,
          latencyMs: this.now() - started,
          seq,
        });
      } else {
        this.framesDropped++;
      }
    } catch (err) {
      this.onError(err);
    } finally {
      this.inFlight = false;
      const next = this.pending;
      this.pending = null;
      if (next) void this.issue(next.pose, next.mode);
    }
  }
}
