import type { Scene } from "./scene.js";

const BG = "#111827";

/** Draw a scene onto a 2D canvas. The only code that touches canvas. */
export function paintScene(ctx: CanvasRenderingContext2D, scene: Scene): void {
  ctx.clearRect(0, 0, scene.width, scene.height);
  ctx.fillStyle = BG;
  ctx.fillRect(0, 0, scene.width, scene.height);

  for (const shape of scene.shapes) {
    switch (shape.kind) {
      case "cluster": {
        ctx.beginPath();
        ctx.setLineDash([4, 4]);
        ctx.strokeStyle = shape.stroke;
        ctx.lineWidth = 1;
        ctx.arc(shape.cx, shape.cy, shape.r, 0, 2 * Math.PI);
        ctx.stroke();
        ctx.setLineDash([]);
        break;
      }
      case "line": {
        ctx.beginPath();
        ctx.strokeStyle = shape.stroke;
        ctx.lineWidth = shape.width;
        ctx.globalAlpha = shape.role === "link" ? 0.45 : 0.9;
        ctx.moveTo(shape.x1, shape.y1);
        ctx.lineTo(shape.x2, shape.y2);
        ctx.stroke();
        ctx.globalAlpha = 1;
        break;
      }
      case "vertex": {
        if (shape.emphasis) {
          ctx.beginPath();
          ctx.fillStyle = "rgba(46, 204, 113, 0.25)";
          ctx.arc(shape.x, shape.y, shape.r + 6, 0, 2 * Math.PI);
          ctx.fill();
        }
        ctx.beginPath();
        ctx.fillStyle = shape.fill;
        ctx.arc(shape.x, shape.y, shape.r, 0, 2 * Math.PI);
        ctx.fill();
        if (shape.stroke !== null) {
          ctx.strokeStyle = shape.stroke;
          ctx.lineWidth = shape.strokeWidth;
          ctx.stroke();
        }
        if (shape.label !== null) {
          ctx.fillStyle = "#e5e7eb";
          ctx.font = "10px system-ui, sans-serif";
          ctx.textAlign = "center";
          ctx.fillText(shape.label, shape.x, shape.y - shape.r - 4);
        }
        break;
      }
      case "badge": {
        const ok = shape.tone === "ok";
        ctx.font = "bold 13px system-ui, sans-serif";
        const w = ctx.measureText(shape.text).width + 18;
        ctx.fillStyle = ok ? "rgba(46, 204, 113, 0.18)" : "rgba(231, 76, 60, 0.22)";
        ctx.strokeStyle = ok ? "#2ecc71" : "#e74c3c";
        ctx.lineWidth = 1;
        ctx.beginPath();
        ctx.roundRect(shape.x - w / 2, shape.y - 12, w, 22, 6);
        ctx.fill();
        ctx.stroke();
        ctx.fillStyle = ok ? "#2ecc71" : "#e74c3c";
        ctx.textAlign = "center";
        ctx.textBaseline = "middle";
        ctx.fillText(shape.text, shape.x, shape.y);
        ctx.textBaseline = "alphabetic";
        break;
      }
    }
  }
}
