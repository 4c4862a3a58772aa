/** Client view state: cursor, playback, active tool. */

export interface ViewState {
  frame: number;
  frameCount: number;
  playing: boolean;
  /** frames per second while playing (sequence nominal fps by default) */
  playbackFps: number;
  activeLabel: number;
  brushRadius: number;
  hoverPoint: [number, number, number] | null;
}

export function initialViewState(frameCount: number, fps: number): ViewState {
  if (frameCount < 1) throw new Error("sequence has no frames");
  return {
    frame: 0,
    frameCount,
    playing: false,
    playbackFps: fps > 0 ? fps : 30,
    activeLabel: 1,
    brushRadius: 0.05,
    hoverPoint: null,
  };
}

export function clampFrame(state: ViewState, frame: number): number {
  return Math.max(0, Math.min(state.frameCount - 1, frame));
}

export function stepFrame(state: ViewState, delta: number): ViewState {
  return { ...state, frame: clampFrame(state, state.frame + delta) };
}

export function setBrushRadius(state: ViewState, radius: number): ViewState {
  if (!(radius > 0)) throw new Error("brush radius must be positive");
  return { ...state, brushRadius: radius };
}
