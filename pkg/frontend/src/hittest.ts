import type { Box } from "./types.js";

/** Resolve a click in scene coordinates to the object it lands on.
 *
 * Overlapping candidates resolve to the smallest-area containing box;
 * exact area ties break to the lexicographically smallest object id so
 * the result never depends on box order. Returns null outside all boxes.
 */
export function hitTest(boxes: readonly Box[], x: number, y: number): string | null {
  let best: Box | null = null;
  for (const box of boxes) {
    if (x < box.x || y < box.y || x > box.x + box.w || y > box.y + box.h) {
      continue;
    }
    if (best === null) {
      best = box;
      continue;
    }
    const a = box.w * box.h;
    const b = best.w * best.h;
    if (a < b || (a === b && box.object_id < best.object_id)) {
      best = box;
    }
  }
  return best === null ? null : best.object_id;
}

export function boxCenter(box: Box): { x: number; y: number } {
  return { x: box.x + box.w / 2, y: box.y + box.h / 2 };
}
