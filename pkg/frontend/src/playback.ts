/**
 * Video-player behavior: advance the cursor at the nominal fps while playing,
 * prefetch the next two frames, stop at the last frame (no wrap), and pause
 * with a banner if a frame fetch misses.
 */

export interface PlaybackHooks {
  showFrame(i: number): Promise<void>;
  prefetch(i: number): void;
  onEnded(): void;
  onFetchError(message: string): void;
}

export class PlaybackLoop {
  private timer: ReturnType<typeof setInterval> | null = null;
  playing = false;

  constructor(
    private readonly frameCount: number,
    private readonly fps: number,
    private readonly hooks: PlaybackHooks,
    private cursor = 0,
  ) {}

  get frame(): number {
    return this.cursor;
  }

  play() {
    if (this.playing || this.frameCount < 2) return;
    this.playing = true;
    this.timer = setInterval(() => void this.tick(), 1000 / this.fps);
  }

  pause() {
    this.playing = false;
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Manual stepping while paused: moves exactly one frame per call. */
  step(delta: number) {
    if (this.playing) return;
    void this.seek(this.cursor + delta);
  }

  async seek(frame: number) {
    const target = Math.max(0, Math.min(this.frameCount - 1, frame));
    try {
      await this.hooks.showFrame(target);
      this.cursor = target;
      for (let k = 1; k <= 2; k++) {
        if (target + k < this.frameCount) this.hooks.prefetch(target + k);
      }
    } catch (err) {
      this.pause();
      this.hooks.onFetchError(err instanceof Error ? err.message : String(err));
    }
  }

  private async tick() {
    if (!this.playing) return;
    if (this.cursor + 1 >= this.frameCount) {
      this.pause();
      this.hooks.onEnded();
      return;
    }
    await this.seek(this.cursor + 1);
  }
}
