import type { SlotSnapshot } from "./types.js";
import type { Scene, Shape, Viewport } from "./scene.js";
import { emptyScene } from "./scene.js";
import { roleColor, roleOf, type ViewOptions } from "./palette.js";

const MARGIN = 28;
const LINK_STROKE = "#7f8c8d";

/** Map a unit-square embedding coordinate into the viewport. */
export function topologyPosition(
  point: number[],
  viewport: Viewport,
): { x: number; y: number } {
  const [px = 0, py = 0] = point;
  return {
    x: MARGIN + px * (viewport.width - 2 * MARGIN),
    y: MARGIN + py * (viewport.height - 2 * MARGIN),
  };
}

/**
 * Render one slot's overlay: every node at its embedded coordinates,
 * an edge from each member to its cluster representative, red-stroked
 * representatives, and an emphasized producer. Fills still follow the
 * role palette; stroke and fill are independent channels, so a node
 * that is both producer and representative shows both.
 */
export function renderTopology(
  snapshot: SlotSnapshot,
  options: ViewOptions,
  viewport: Viewport,
): Scene {
  const topo = snapshot.topology;
  if (topo === null) return emptyScene(viewport);

  const n = topo.points.length;
  const reps = new Set(topo.representatives);
  const shapes: Shape[] = [];

  if (options.showHulls) {
    for (let c = 0; c < topo.k; c++) {
      const centroid = topo.centroids[c];
      if (centroid === undefined) continue;
      const at = topologyPosition(centroid, viewport);
      let radius = 0;
      for (let node = 0; node < n; node++) {
        if (topo.assignment[node] !== c) continue;
        const p = topologyPosition(topo.points[node] ?? [], viewport);
        radius = Math.max(radius, Math.hypot(p.x - at.x, p.y - at.y));
      }
      shapes.push({ kind: "cluster", cx: at.x, cy: at.y, r: radius + 10, stroke: "#4b5563" });
    }
  }

  for (let node = 0; node < n; node++) {
    const cluster = topo.assignment[node];
    if (cluster === undefined) continue;
    const rep = topo.representatives[cluster];
    if (rep === undefined || rep === node) continue;
    const from = topologyPosition(topo.points[node] ?? [], viewport);
    const to = topologyPosition(topo.points[rep] ?? [], viewport);
    shapes.push({
      kind: "line",
      x1: from.x,
      y1: from.y,
      x2: to.x,
      y2: to.y,
      stroke: LINK_STROKE,
      width: 1,
      role: "link",
    });
  }

  for (let node = 0; node < n; node++) {
    const { x, y } = topologyPosition(topo.points[node] ?? [], viewport);
    const isRep = reps.has(node);
    const isProducer = snapshot.roles !== null && node === snapshot.roles.producer;
    const role = snapshot.roles === null ? "Validator" : roleOf(node, snapshot.roles);
    shapes.push({
      kind: "vertex",
      node,
      x,
      y,
      r: isProducer ? 11 : isRep ? 9 : 6,
      fill: roleColor(options, role),
      stroke: isRep ? options.representativeStroke : null,
      strokeWidth: isRep ? 2.5 : 0,
      label: options.showLabels ? String(node) : null,
      emphasis: isProducer,
    });
  }

  return { width: viewport.width, height: viewport.height, shapes };
}
