import type { SlotSnapshot } from "./types.js";
import type { Scene, Shape, Viewport } from "./scene.js";
import { emptyScene } from "./scene.js";
import {
  messageColor,
  roleColor,
  roleOf,
  strokeWidthForPayload,
  type ViewOptions,
} from "./palette.js";

/** Position of a node on the ring; exported for canvas hit-testing. */
export function ringPosition(
  node: number,
  n: number,
  viewport: Viewport,
): { x: number; y: number } {
  const cx = viewport.width / 2;
  const cy = viewport.height / 2;
  const radius = 0.42 * Math.min(viewport.width, viewport.height);
  const angle = -Math.PI / 2 + (2 * Math.PI * node) / n;
  return { x: cx + radius * Math.cos(angle), y: cy + radius * Math.sin(angle) };
}

/** Vertex radius shrinks as the network grows so rings stay readable. */
export function ringVertexRadius(n: number, viewport: Viewport): number {
  const radius = 0.42 * Math.min(viewport.width, viewport.height);
  const arc = (2 * Math.PI * radius) / Math.max(1, n);
  return Math.min(16, Math.max(3, 0.32 * arc));
}

/**
 * Render one slot as a ring: every node equally spaced on a circle,
 * filled by role, with each message drawn as a line growing from its
 * sender toward its receiver across the [send_ms, recv_ms] window of
 * view time. The slot outcome, when known, appears as a badge.
 */
export function renderConsensusRing(
  snapshot: SlotSnapshot,
  options: ViewOptions,
  viewMs: number,
  viewport: Viewport,
): Scene {
  const roles = snapshot.roles;
  if (roles === null) return emptyScene(viewport);

  const n = 1 + roles.committee.length + roles.validators.length;
  const r = ringVertexRadius(n, viewport);
  const shapes: Shape[] = [];

  if (options.showMessages) {
    for (const m of snapshot.messages) {
      // never visible outside the message's own time window
      if (viewMs < m.send_ms || viewMs > m.recv_ms) continue;
      const from = ringPosition(m.src, n, viewport);
      const to = ringPosition(m.dst, n, viewport);
      const span = m.recv_ms - m.send_ms;
      const progress = span === 0 ? 1 : (viewMs - m.send_ms) / span;
      shapes.push({
        kind: "line",
        x1: from.x,
        y1: from.y,
        x2: from.x + (to.x - from.x) * progress,
        y2: from.y + (to.y - from.y) * progress,
        stroke: messageColor(options, m.msg_type),
        width: strokeWidthForPayload(m.payload_bytes),
        role: "message",
        msgType: m.msg_type,
      });
    }
  }

  for (let node = 0; node < n; node++) {
    const role = roleOf(node, roles);
    const { x, y } = ringPosition(node, n, viewport);
    shapes.push({
      kind: "vertex",
      node,
      x,
      y,
      r,
      fill: roleColor(options, role),
      stroke: null,
      strokeWidth: 0,
      label: options.showLabels ? String(node) : null,
      emphasis: node === roles.producer,
    });
  }

  if (snapshot.outcome !== null) {
    const skipped = snapshot.outcome.kind === "skip";
    shapes.push({
      kind: "badge",
      text: skipped ? "Skip" : "Finalized",
      x: viewport.width / 2,
      y: 26,
      tone: skipped ? "skip" : "ok",
    });
  }

  return { width: viewport.width, height: viewport.height, shapes };
}
