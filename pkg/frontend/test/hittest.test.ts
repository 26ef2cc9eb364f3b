import { describe, expect, it } from "vitest";

import { boxCenter, hitTest } from "../src/hittest.js";
import type { Box } from "../src/types.js";

const box = (id: string, x: number, y: number, w: number, h: number): Box => ({
  object_id: id,
  x,
  y,
  w,
  h,
});

describe("hitTest", () => {
  const boxes = [box("a", 0, 0, 100, 100), box("b", 150, 0, 40, 40)];

  it("resolves a click at a box center", () => {
    const c = boxCenter(boxes[1]!);
    expect(hitTest(boxes, c.x, c.y)).toBe("b");
  });

  it("ignores clicks outside every box", () => {
    expect(hitTest(boxes, 120, 200)).toBeNull();
  });

  it("prefers the smallest containing box on overlap", () => {
    const nested = [box("outer", 0, 0, 100, 100), box("inner", 40, 40, 20, 20)];
    expect(hitTest(nested, 50, 50)).toBe("inner");
    expect(hitTest(nested, 10, 10)).toBe("outer");
  });

  it("breaks exact area ties deterministically by object id", () => {
    const twins = [box("z", 0, 0, 50, 50), box("a", 25, 0, 50, 50)];
    expect(hitTest(twins, 30, 10)).toBe("a");
    expect(hitTest([twins[1]!, twins[0]!], 30, 10)).toBe("a");
  });

  it("treats box edges as inside", () => {
    expect(hitTest(boxes, 0, 0)).toBe("a");
    expect(hitTest(boxes, 100, 100)).toBe("a");
  });
});
