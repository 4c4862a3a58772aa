/**
 * App wiring: fetch sequence metadata, drive the viewer, toolbar, playback,
 * brush strokes, undo, and propagation against the session API. The client
 * keeps no authoritative state: every reconciliation refetches the mask, so
 * clearing client state and refetching reproduces the displayed labels.
 */

import { SessionApi, type PaletteEntry, type StepReport } from "./api";
import { decodeFrame, decodeMask, type DecodedFrame } from "./binary";
import { pickBrushCenter } from "./pick";
import { PlaybackLoop } from "./playback";
import { BrushStroke } from "./stroke";
import { displayColors } from "./tint";
import { Viewer } from "./viewer";
import { initialViewState, setBrushRadius, type ViewState } from "./viewstate";

const api = new SessionApi("");

const canvas = document.getElementById("viewport") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const toast = document.getElementById("toast") as HTMLDivElement;
const frameLabel = document.getElementById("frame-label") as HTMLSpanElement;
const scrub = document.getElementById("scrub") as HTMLInputElement;
const playBtn = document.getElementById("play") as HTMLButtonElement;
const prevBtn = document.getElementById("prev") as HTMLButtonElement;
const nextBtn = document.getElementById("next") as HTMLButtonElement;
const undoBtn = document.getElementById("undo") as HTMLButtonElement;
const propagateBtn = document.getElementById("propagate") as HTMLButtonElement;
const modeSelect = document.getElementById("mode") as HTMLSelectElement;
const radiusInput = document.getElementById("radius") as HTMLInputElement;
const radiusLabel = document.getElementById("radius-label") as HTMLSpanElement;
const paletteDiv = document.getElementById("palette") as HTMLDivElement;
const reportPre = document.getElementById("report") as HTMLPreElement;

let viewer: Viewer;
let view: ViewState;
let palette: PaletteEntry[] = [];
let frames: Map<number, DecodedFrame> = new Map();
let currentMask: Uint16Array | null = null;
let playback: PlaybackLoop;

function showBanner(message: string | null) {
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

let toastTimer: ReturnType<typeof setTimeout> | null = null;
function showToast(message: string) {
  toast.textContent = message;
  toast.style.display = "block";
  if (toastTimer) clearTimeout(toastTimer);
  toastTimer = setTimeout(() => (toast.style.display = "none"), 2500);
}

async function fetchFrame(i: number): Promise<DecodedFrame> {
  const cached = frames.get(i);
  if (cached) return cached;
  const decoded = decodeFrame(await api.frame(i));
  frames.set(i, decoded);
  // keep a small window of decoded frames
  if (frames.size > 8) {
    const oldest = frames.keys().next().value;
    if (oldest !== undefined && oldest !== i) frames.delete(oldest);
  }
  return decoded;
}

async function showFrame(i: number) {
  const frame = await fetchFrame(i);
  const mask = decodeMask(await api.mask(i));
  try {
    const colors = displayColors(frame.colors, mask, palette);
    viewer.setCloud(frame.positions, colors);
    showBanner(null);
  } catch (err) {
    showBanner(err instanceof Error ? err.message : String(err));
    return;
  }
  currentMask = mask;
  view.frame = i;
  scrub.value = String(i);
  frameLabel.textContent = `${i + 1} / ${view.frameCount}`;
}

async function refreshMask() {
  const frame = frames.get(view.frame);
  if (!frame) return;
  currentMask = decodeMask(await api.mask(view.frame));
  viewer.setColors(displayColors(frame.colors, currentMask, palette));
}

function renderPalette() {
  paletteDiv.replaceChildren();
  const eraser = document.createElement("button");
  eraser.textContent = "eraser";
  eraser.className = view.activeLabel === 0 ? "label active" : "label";
  eraser.onclick = () => {
    view.activeLabel = 0;
    renderPalette();
  };
  paletteDiv.appendChild(eraser);
  for (const entry of palette) {
    const btn = document.createElement("button");
    btn.textContent = entry.name;
    btn.className = view.activeLabel === entry.label ? "label active" : "label";
    btn.style.borderColor = `rgb(${entry.color.join(",")})`;
    btn.onclick = () => {
      view.activeLabel = entry.label;
      renderPalette();
    };
    paletteDiv.appendChild(btn);
  }
}

function pointerPick(ev: PointerEvent) {
  const frame = frames.get(view.frame);
  if (!frame) return null;
  const rect = canvas.getBoundingClientRect();
  return pickBrushCenter(
    frame.positions,
    viewer.camera,
    { x: ev.clientX - rect.left, y: ev.clientY - rect.top },
    { width: rect.width, height: rect.height },
  );
}

function wireBrush() {
  let stroke: BrushStroke | null = null;

  canvas.addEventListener("pointermove", (ev) => {
    const hit = pointerPick(ev);
    view.hoverPoint = hit ? hit.point : null;
    viewer.setCursor(view.hoverPoint, view.brushRadius);
    if (stroke && hit) stroke.add(hit.point);
  });

  canvas.addEventListener("pointerdown", (ev) => {
    if (ev.button !== 0 || !ev.shiftKey) return; // shift+drag paints, plain drag orbits
    const hit = pointerPick(ev);
    if (!hit) return;
    viewer.setControlsEnabled(false);
    canvas.setPointerCapture(ev.pointerId);
    stroke = new BrushStroke(api, view.frame, view.brushRadius, view.activeLabel, {
      onLocalBrush: (center, radius, label) => applyLocalBrush(center, radius, label),
      onAck: () => viewer.pulse(),
      onRollback: (message) => {
        showToast(`brush failed: ${message}`);
        void refreshMask(); // server state is authoritative
      },
    });
    stroke.add(hit.point);
  });

  const finish = () => {
    viewer.setControlsEnabled(true);
    if (!stroke) return;
    const s = stroke;
    stroke = null;
    void s.end().then((changed) => {
      if (changed !== null) void refreshMask();
    });
  };
  canvas.addEventListener("pointerup", finish);
  canvas.addEventListener("pointercancel", finish);
}

/** Optimistic tint: recolor points inside the sphere locally immediately. */
function applyLocalBrush(center: [number, number, number], radius: number, label: number) {
  const frame = frames.get(view.frame);
  if (!frame || !currentMask) return;
  const r2 = radius * radius;
  const pos = frame.positions;
  for (let i = 0; i < currentMask.length; i++) {
    const dx = pos[3 * i] - center[0];
    const dy = pos[3 * i + 1] - center[1];
    const dz = pos[3 * i + 2] - center[2];
    if (dx * dx + dy * dy + dz * dz <= r2) currentMask[i] = label;
  }
  viewer.setColors(displayColors(frame.colors, currentMask, palette));
}

function wireToolbar() {
  playBtn.onclick = () => {
    if (playback.playing) {
      playback.pause();
      playBtn.textContent = "play";
    } else {
      playback.play();
      playBtn.textContent = "pause";
    }
  };
  prevBtn.onclick = () => playback.step(-1);
  nextBtn.onclick = () => playback.step(+1);
  scrub.oninput = () => void playback.seek(Number(scrub.value));
  undoBtn.onclick = () =>
    void api
      .undo()
      .then(({ frame }) => {
        showToast(`undid edit on frame ${frame}`);
        if (frame === view.frame) void refreshMask();
      })
      .catch((err) => showToast(err.message));
  radiusInput.oninput = () => {
    view = setBrushRadius(view, Number(radiusInput.value));
    radiusLabel.textContent = `${view.brushRadius.toFixed(3)} m`;
  };
  propagateBtn.onclick = () => {
    const to = view.frameCount - 1;
    propagateBtn.disabled = true;
    reportPre.textContent = `propagating ${view.frame} -> ${to} ...`;
    void api
      .propagate(view.frame, to, modeSelect.value)
      .then((reports) => {
        reportPre.textContent = formatReports(reports);
        void refreshMask();
      })
      .catch((err) => {
        reportPre.textContent = "";
        showToast(`propagation failed: ${err.message}`);
      })
      .finally(() => (propagateBtn.disabled = false));
  };
}

function formatReports(reports: StepReport[]): string {
  const lines: string[] = [];
  for (const step of reports) {
    for (const r of step.labels) {
      const name = palette.find((e) => e.label === r.label)?.name ?? `label ${r.label}`;
      lines.push(
        r.failed
          ? `${step.frame_from}->${step.frame_to}  ${name}: FAILED ${r.reason ?? ""}`
          : `${step.frame_from}->${step.frame_to}  ${name}: ${r.transferred} pts, ` +
              `rmse ${r.icp_rmse?.toExponential(2)}, ${r.iterations} iters`,
      );
    }
  }
  return lines.join("\n");
}

async function start() {
  const info = await api.sequence();
  palette = await api.palette();
  view = initialViewState(info.frame_count, info.fps);
  viewer = new Viewer(canvas);
  scrub.max = String(info.frame_count - 1);
  radiusInput.value = String(view.brushRadius);
  radiusLabel.textContent = `${view.brushRadius.toFixed(3)} m`;
  playback = new PlaybackLoop(info.frame_count, view.playbackFps, {
    showFrame,
    prefetch: (i) => void fetchFrame(i).catch(() => undefined),
    onEnded: () => (playBtn.textContent = "play"),
    onFetchError: (message) => showBanner(`playback paused: ${message}`),
  });
  renderPalette();
  wireToolbar();
  wireBrush();
  await showFrame(0);
}

void start().catch((err) => showBanner(`failed to load sequence: ${err.message}`));
