/**
 * Brush stroke controller: turns a pointer drag into a serialized sequence of
 * /api/brush calls (sampled at most every 30 ms), applying an optimistic
 * local tint that is reconciled with the server's change counts, and rolled
 * back wholesale if any call fails.
 */

import type { SessionApi } from "./api";

export const STROKE_SAMPLE_MS = 30;

export interface StrokeEvents {
  /** optimistic local tint for a sampled brush application */
  onLocalBrush(center: [number, number, number], radius: number, label: number): void;
  /** server acknowledged one brush call */
  onAck(changed: number): void;
  /** a call failed: local tint must be rolled back; message goes to a toast */
  onRollback(message: string): void;
}

export class BrushStroke {
  private lastSampleAt = -Infinity;
  private queue: Promise<void> = Promise.resolve();
  private failed = false;
  private pending = 0;
  private finished = false;
  private totalChanged = 0;
  private resolveDone!: (changed: number | null) => void;
  /** resolves with the summed change count, or null if rolled back */
  readonly done: Promise<number | null>;

  constructor(
    private readonly api: SessionApi,
    private readonly frame: number,
    private readonly radius: number,
    private readonly label: number,
    private readonly events: StrokeEvents,
    private readonly now: () => number = () => performance.now(),
  ) {
    this.done = new Promise((resolve) => {
      this.resolveDone = resolve;
    });
  }

  /** Feed one drag sample; ignored when inside the sampling interval. */
  add(center: [number, number, number]): boolean {
    if (this.failed || this.finished) return false;
    const t = this.now();
    if (t - this.lastSampleAt < STROKE_SAMPLE_MS) return false;
    this.lastSampleAt = t;
    this.events.onLocalBrush(center, this.radius, this.label);
    this.pending += 1;
    // mutations stay in stroke order: each call chains on the previous one
    this.queue = this.queue.then(async () => {
      try {
        if (this.failed) return; // a prior call already rolled the stroke back
        const { changed } = await this.api.brush(this.frame, center, this.radius, this.label);
        this.totalChanged += changed;
        this.events.onAck(changed);
      } catch (err) {
        this.failed = true;
        this.events.onRollback(err instanceof Error ? err.message : String(err));
      } finally {
        this.pending -= 1;
        this.maybeResolve();
      }
    });
    return true;
  }

  /** End of drag: resolves once every in-flight call has settled. */
  end(): Promise<number | null> {
    this.finished = true;
    this.maybeResolve();
    return this.done;
  }

  private maybeResolve() {
    if (this.finished && this.pending === 0) {
      this.resolveDone(this.failed ? null : this.totalChanged);
    }
  }
}
