import type { AnnotationTask, ScenePayload } from "./types.js";

/** Canvas renderer: paints the scene's cell color map scaled to the canvas
 * and outlines every candidate box. Returns the canvas->scene coordinate
 * mapping used by click handling. */

export interface CanvasMapping {
  toScene(cx: number, cy: number): { x: number; y: number };
}

export function renderScene(
  canvas: HTMLCanvasElement,
  scene: ScenePayload,
): CanvasMapping {
  const ctx = canvas.getContext("2d");
  if (ctx === null) {
    throw new Error("canvas 2d context unavailable");
  }
  const sx = canvas.width / scene.width;
  const sy = canvas.height / scene.height;

  const cells = scene.render.cells ?? [];
  const cellW = canvas.width / scene.cols;
  const cellH = canvas.height / scene.rows;
  for (let r = 0; r < scene.rows; r++) {
    for (let c = 0; c < scene.cols; c++) {
      ctx.fillStyle = cells[r * scene.cols + c] ?? "#555555";
      ctx.fillRect(c * cellW, r * cellH, Math.ceil(cellW), Math.ceil(cellH));
    }
  }

  const colors = scene.render.objects ?? {};
  for (const box of scene.boxes) {
    const color = colors[box.object_id] ?? "#ffffff";
    ctx.fillStyle = color;
    ctx.globalAlpha = 0.75;
    ctx.fillRect(box.x * sx, box.y * sy, box.w * sx, box.h * sy);
    ctx.globalAlpha = 1.0;
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 2;
    ctx.strokeRect(box.x * sx, box.y * sy, box.w * sx, box.h * sy);
  }

  return {
    toScene: (cx, cy) => ({ x: cx / sx, y: cy / sy }),
  };
}

export function renderSentence(el: HTMLElement, task: AnnotationTask): void {
  el.textContent = task.sentence;
}
