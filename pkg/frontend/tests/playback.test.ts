import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { PlaybackLoop, type PlaybackHooks } from "../src/playback";

function makeHooks(failAt: number | null = null) {
  const shown: number[] = [];
  const prefetched: number[] = [];
  const events: string[] = [];
  const hooks: PlaybackHooks = {
    showFrame: async (i) => {
      if (i === failAt) throw new Error(`frame ${i} fetch failed`);
      shown.push(i);
    },
    prefetch: (i) => prefetched.push(i),
    onEnded: () => events.push("ended"),
    onFetchError: (m) => events.push(`error:${m}`),
  };
  return { hooks, shown, prefetched, events };
}

describe("PlaybackLoop", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("plays 0,1,2 on a 3-frame sequence and stops at the last frame", async () => {
    const { hooks, shown, events } = makeHooks();
    const loop = new PlaybackLoop(3, 30, hooks);
    loop.play();
    await vi.advanceTimersByTimeAsync(1000 / 30 + 1);
    await vi.advanceTimersByTimeAsync(1000 / 30 + 1);
    await vi.advanceTimersByTimeAsync(1000 / 30 + 1);
    await vi.advanceTimersByTimeAsync(1000 / 30 + 1);
    expect(shown).toEqual([1, 2]);
    expect(loop.frame).toBe(2);
    expect(loop.playing).toBe(false);
    expect(events).toContain("ended");
  });

  it("ticks at the nominal fps", async () => {
    const { hooks, shown } = makeHooks();
    const loop = new PlaybackLoop(100, 30, hooks);
    loop.play();
    await vi.advanceTimersByTimeAsync(1000); // one second of playback at 30 fps
    expect(shown.length).toBeGreaterThanOrEqual(29);
    expect(shown.length).toBeLessThanOrEqual(31);
    loop.pause();
  });

  it("pause freezes the cursor and step moves exactly one frame", async () => {
    const { hooks, shown } = makeHooks();
    const loop = new PlaybackLoop(5, 30, hooks);
    loop.play();
    await vi.advanceTimersByTimeAsync(1000 / 30 + 1);
    loop.pause();
    const at = loop.frame;
    await vi.advanceTimersByTimeAsync(500);
    expect(loop.frame).toBe(at);
    loop.step(+1);
    await vi.advanceTimersByTimeAsync(1);
    expect(loop.frame).toBe(at + 1);
    expect(shown.at(-1)).toBe(at + 1);
  });

  it("prefetches the next two frames", async () => {
    const { hooks, prefetched } = makeHooks();
    const loop = new PlaybackLoop(10, 30, hooks);
    await loop.seek(4);
    expect(prefetched).toEqual([5, 6]);
  });

  it("pauses with an error on a fetch miss", async () => {
    const { hooks, events } = makeHooks(2);
    const loop = new PlaybackLoop(5, 30, hooks);
    loop.play();
    await vi.advanceTimersByTimeAsync(1000 / 30 + 1); // -> 1
    await vi.advanceTimersByTimeAsync(1000 / 30 + 1); // -> 2 fails
    expect(loop.playing).toBe(false);
    expect(loop.frame).toBe(1);
    expect(events).toContain("error:frame 2 fetch failed");
  });

  it("clamps seeks into range", async () => {
    const { hooks } = makeHooks();
    const loop = new PlaybackLoop(4, 30, hooks);
    await loop.seek(99);
    expect(loop.frame).toBe(3);
    await loop.seek(-5);
    expect(loop.frame).toBe(0);
  });
});
