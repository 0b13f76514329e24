// Rolling fps / latency counters for the overlay.

export class FrameStats {
  private times: number[] = [];
  private latencies: number[] = [];
  private window: number;

  constructor(windowMs = 2000) {
    this.window = windowMs;
  }

  record(nowMs: number, latencyMs: number): void {
    this.times.push(nowMs);
    this.latencies.push(latencyMs);
    const cutoff = nowMs - this.window;
    while (this.times.length && this.times[0] < cutoff) {
      this.times.shift();
      this.latencies.shift();
    }
  }

  fps(nowMs: number): number {
    const cutoff = nowMs - this.window;
    const n = this.times.filter((t) => t >= cutoff).length;
    return (1000 * n) / this.window;
  }

  meanLatencyMs(): number {
    if (!this.latencies.length) return 0;
    return this.latencies.reduce((a, b) => a + b, 0) / this.latencies.length;
  }
}
