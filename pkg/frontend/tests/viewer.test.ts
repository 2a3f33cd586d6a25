import { describe, expect, it } from "vitest";

import {
  OverlayContext,
  canvasToVoxel,
  drawContours,
  drawMarkers,
  markersOnSlice,
  voxelToCanvas,
} from "../src/viewer.js";

class FakeCtx implements OverlayContext {
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 0;
  ops: string[] = [];

  beginPath(): void {
    this.ops.push("begin");
  }
  moveTo(x: number, y: number): void {
    this.ops.push(`move ${x},${y}`);
  }
  lineTo(x: number, y: number): void {
    this.ops.push(`line ${x},${y}`);
  }
  arc(x: number, y: number): void {
    this.ops.push(`arc ${x},${y}`);
  }
  stroke(): void {
    this.ops.push("stroke");
  }
  fill(): void {
    this.ops.push("fill");
  }

  count(prefix: string): number {
    return this.ops.filter((op) => op.startsWith(prefix)).length;
  }
}

describe("coordinate transforms", () => {
  it("map voxel centers to scaled pixel centers", () => {
    expect(voxelToCanvas(0, 8)).toBe(4);
    expect(voxelToCanvas(31.5, 8)).toBe(256);
  });

  it("round-trip for in-range coordinates", () => {
    for (const v of [0, 0.25, 17, 31.5, 63]) {
      expect(canvasToVoxel(voxelToCanvas(v, 8), 8, 64)).toBeCloseTo(v, 12);
    }
  });

  it("clamp clicks outside the volume onto its edge", () => {
    expect(canvasToVoxel(-50, 8, 64)).toBe(0);
    expect(canvasToVoxel(10000, 8, 64)).toBe(63);
  });
});

describe("markersOnSlice", () => {
  it("keeps only seeds on the given axial slice", () => {
    const primary = { x: 32, y: 32, z: 32 };
    const extras = [
      { x: 40, y: 32, z: 32 },
      { x: 40, y: 32, z: 20 },
    ];
    const vis = markersOnSlice(primary, extras, 32);
    expect(vis.primary).toBe(primary);
    expect(vis.extras).toEqual([extras[0]]);
    const other = markersOnSlice(primary, extras, 20);
    expect(other.primary).toBeNull();
    expect(other.extras).toEqual([extras[1]]);
  });
});

describe("drawContours", () => {
  it("emits one stroked path per loop with scaled coordinates", () => {
    const ctx = new FakeCtx();
    const loop = [
      [10, 10],
      [12, 10],
      [12, 12],
      [10, 10],
    ];
    drawContours(ctx, [loop], 8);
    expect(ctx.count("begin")).toBe(1);
    expect(ctx.count("stroke")).toBe(1);
    expect(ctx.count("move")).toBe(1);
    expect(ctx.count("line")).toBe(3);
    expect(ctx.ops[1]).toBe("move 84,84"); // (10 + 0.5) * 8
  });

  it("skips degenerate loops", () => {
    const ctx = new FakeCtx();
    drawContours(ctx, [[[5, 5]]], 8);
    expect(ctx.ops).toEqual([]);
  });
});

describe("drawMarkers", () => {
  it("draws a crosshair for the primary and a dot per extra on this slice", () => {
    const ctx = new FakeCtx();
    drawMarkers(
      ctx,
      { x: 32, y: 32, z: 32 },
      [
        { x: 40, y: 32, z: 32 },
        { x: 40, y: 32, z: 10 },
      ],
      32,
      8,
    );
    expect(ctx.count("stroke")).toBe(1); // crosshair
    expect(ctx.count("arc")).toBe(1); // only the on-slice extra
    expect(ctx.count("fill")).toBe(1);
    expect(ctx.ops).toContain("arc 324,260"); // (40.5*8, 32.5*8)
  });

  it("draws nothing for other slices", () => {
    const ctx = new FakeCtx();
    drawMarkers(ctx, { x: 32, y: 32, z: 32 }, [{ x: 40, y: 32, z: 32 }], 5, 8);
    expect(ctx.ops).toEqual([]);
  });
});
