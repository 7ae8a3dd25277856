// Scene graph produced by the render functions and drawn by paint.ts.
// Pure data with a deterministic shape order, so identical inputs yield
// identical scenes (deep-comparable in tests).

export interface VertexShape {
  kind: "vertex";
  node: number;
  x: number;
  y: number;
  r: number;
  fill: string;
  stroke: string | null;
  strokeWidth: number;
  label: string | null;
  /** producer highlight: painted with a halo and a heavier outline */
  emphasis: boolean;
}

export interface LineShape {
  kind: "line";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  stroke: string;
  width: number;
  /** member-to-representative links vs in-flight messages */
  role: "link" | "message";
  msgType?: string;
}

export interface ClusterShape {
  kind: "cluster";
  cx: number;
  cy: number;
  r: number;
  stroke: string;
}

export interface BadgeShape {
  kind: "badge";
  text: string;
  x: number;
  y: number;
  tone: "ok" | "skip";
}

export type Shape = VertexShape | LineShape | ClusterShape | BadgeShape;

export interface Scene {
  width: number;
  height: number;
  shapes: Shape[];
}

export interface Viewport {
  width: number;
  height: number;
}

export function emptyScene(viewport: Viewport): Scene {
  return { width: viewport.width, height: viewport.height, shapes: [] };
}
