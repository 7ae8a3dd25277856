import { ApiClient } from "./api.js";
import { EventStore } from "./store.js";
import { ControlPanel } from "./panel.js";
import { addRole, defaultOptions, roleColor } from "./palette.js";
import { renderConsensusRing } from "./ring.js";
import { renderTopology } from "./topology.js";
import { paintScene } from "./paint.js";
import type { Scene, VertexShape } from "./scene.js";

const apiBase =
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8600";

const api = new ApiClient(apiBase);
const store = new EventStore();
const panel = new ControlPanel(api);
const options = defaultOptions();

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const ringCanvas = $<HTMLCanvasElement>("ring");
const topoCanvas = $<HTMLCanvasElement>("topology");
const ringCtx = ringCanvas.getContext("2d")!;
const topoCtx = topoCanvas.getContext("2d")!;
const viewport = { width: ringCanvas.width, height: ringCanvas.height };

let viewSlot: number | null = null; // null = follow the newest slot
let selectedNode: number | null = null;
let lastRingScene: Scene | null = null;
let lastTopoScene: Scene | null = null;
let metaSampledAt = performance.now();

function slotDurationMs(): number {
  const cfg = panel.state.meta?.config;
  const d = cfg ? (cfg["slot_duration_ms"] as number | undefined) : undefined;
  return d ?? 1000;
}

function currentViewSlot(): number | null {
  if (viewSlot !== null) return viewSlot;
  return store.latestSlot;
}

/**
 * View time inside the displayed slot. A live, running slot tracks the
 * server clock; otherwise the slot's window loops so messages replay.
 */
function viewTimeMs(slot: number, wallNow: number): number {
  const dur = slotDurationMs();
  const start = slot * dur;
  const meta = panel.state.meta;
  const live =
    meta !== null && meta.mode === "live" && !meta.paused && !meta.finished;
  if (live && meta.current_slot === slot) {
    const speed = meta.speed ?? 1;
    const est = meta.now_ms + (wallNow - metaSampledAt) * speed;
    return Math.min(start + dur, Math.max(start, est));
  }
  const period = dur / Math.max(0.05, options.animationSpeed);
  return start + (wallNow % period) / period * dur;
}

function frame(): void {
  const slot = currentViewSlot();
  if (slot !== null) {
    const snap = store.slotSnapshot(slot);
    const now = performance.now();
    lastRingScene = renderConsensusRing(snap, options, viewTimeMs(slot, now), viewport);
    lastTopoScene = renderTopology(snap, options, viewport);
    paintScene(ringCtx, lastRingScene);
    paintScene(topoCtx, lastTopoScene);
    $("slot-label").textContent = `slot ${slot}`;
  }
  requestAnimationFrame(frame);
}

function hitTest(scene: Scene | null, x: number, y: number): number | null {
  if (scene === null) return null;
  for (const shape of scene.shapes) {
    if (shape.kind !== "vertex") continue;
    const v = shape as VertexShape;
    if (Math.hypot(v.x - x, v.y - y) <= v.r + 3) return v.node;
  }
  return null;
}

function bindCanvasPick(canvas: HTMLCanvasElement, scene: () => Scene | null): void {
  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const node = hitTest(scene(), ev.clientX - rect.left, ev.clientY - rect.top);
    if (node !== null) {
      selectedNode = node;
      $("selected").textContent = `node ${node}`;
    }
  });
}

function renderLegend(): void {
  const box = $("legend");
  box.innerHTML = "";
  for (const [name, color] of Object.entries(options.rolePalette)) {
    const chip = document.createElement("span");
    chip.className = "chip";
    chip.innerHTML = `<i style="background:${color}"></i>${name}`;
    box.appendChild(chip);
  }
}

function setControlsEnabled(enabled: boolean): void {
  for (const el of document.querySelectorAll<HTMLButtonElement>("button[data-ctl]")) {
    el.disabled = !enabled;
  }
  document.body.classList.toggle("disconnected", !enabled);
}

function renderStatus(): void {
  const s = panel.state;
  const el = $("status");
  if (!s.connected || s.meta === null) {
    el.textContent = `disconnected from ${apiBase}`;
    setControlsEnabled(false);
    return;
  }
  const m = s.meta;
  const phase = m.finished ? "finished" : m.paused ? "paused" : "running";
  const skips = store.outcomes().filter((o) => o.kind === "skip").length;
  const done = store.outcomes().length;
  el.textContent =
    `${m.mode} | ${phase} | slot ${m.current_slot} | t=${m.now_ms}ms | ` +
    `speed ${m.speed ?? "-"} | ${m.event_count} events | ` +
    `${done - skips} finalized / ${skips} skipped | kernels: ${m.kernel_backend}`;
  setControlsEnabled(m.mode === "live");
}

async function pollMeta(): Promise<void> {
  await panel.refreshMeta();
  metaSampledAt = performance.now();
  renderStatus();
  const latest = store.latestSlot;
  const scrub = $<HTMLInputElement>("scrub");
  if (latest !== null) {
    scrub.max = String(latest);
    if (viewSlot === null) scrub.value = String(latest);
  }
}

function wireControls(): void {
  const withTarget = (fn: (node: number) => Promise<void>) => () => {
    if (selectedNode !== null) void fn(selectedNode).then(renderStatus);
  };
  $("btn-pause").onclick = () => void panel.pause().then(renderStatus);
  $("btn-resume").onclick = () => void panel.resume().then(renderStatus);
  $("btn-step").onclick = () => void panel.stepSlot().then(renderStatus);
  $("btn-kill").onclick = withTarget((n) => panel.killNode(n));
  $("btn-revive").onclick = withTarget((n) => panel.reviveNode(n));
  $<HTMLInputElement>("speed").onchange = (ev) => {
    const v = Number((ev.target as HTMLInputElement).value);
    if (v > 0) void panel.setSpeed(v).then(renderStatus);
  };
  $<HTMLInputElement>("lat-scale").onchange = (ev) => {
    const v = Number((ev.target as HTMLInputElement).value);
    if (v > 0) void panel.setLatencyScale(v).then(renderStatus);
  };
  $<HTMLInputElement>("scrub").oninput = (ev) => {
    viewSlot = Number((ev.target as HTMLInputElement).value);
  };
  $("btn-follow").onclick = () => {
    viewSlot = null;
  };
  $<HTMLInputElement>("opt-messages").onchange = (ev) => {
    options.showMessages = (ev.target as HTMLInputElement).checked;
  };
  $<HTMLInputElement>("opt-labels").onchange = (ev) => {
    options.showLabels = (ev.target as HTMLInputElement).checked;
  };
  $<HTMLInputElement>("opt-hulls").onchange = (ev) => {
    options.showHulls = (ev.target as HTMLInputElement).checked;
  };
  $("btn-add-role").onclick = () => {
    const name = $<HTMLInputElement>("role-name").value.trim();
    const color = $<HTMLInputElement>("role-color").value;
    if (name === "") return;
    try {
      addRole(options, name, color);
      renderLegend();
    } catch (err) {
      $("status").textContent = String(err);
    }
  };
  bindCanvasPick(ringCanvas, () => lastRingScene);
  bindCanvasPick(topoCanvas, () => lastTopoScene);
}

async function boot(): Promise<void> {
  renderLegend();
  wireControls();
  await pollMeta();
  setInterval(() => void pollMeta(), 1000);

  try {
    store.ingestAll(await api.events());
  } catch {
    // initial backlog fetch failed; the stream below still catches up
  }

  const meta = panel.state.meta;
  if (meta !== null && meta.mode === "live" && !meta.finished) {
    api.openStream(
      store.lastSeq,
      (record) => store.ingest(record),
      () => void pollMeta(),
    );
  }
  requestAnimationFrame(frame);
}

void boot();
export { roleColor }; // keeps the palette module reachable for console poking
