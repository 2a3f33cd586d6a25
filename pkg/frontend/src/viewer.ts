/** Canvas geometry and overlay drawing for the axial slice view.
 *
 * The slice PNG maps one image pixel per voxel and is drawn scaled by an
 * integer zoom factor, so voxel (x, y) has its center at canvas pixel
 * ((x + 0.5) * scale, (y + 0.5) * scale). Clicks convert back through the
 * inverse map and are clamped to the volume, which makes an out-of-bounds
 * seed impossible to produce from the canvas.
 */

import { Seed } from "./state.js";

/** Canvas pixel position of a fractional voxel coordinate. */
export function voxelToCanvas(v: number, scale: number): number {
  return (v + 0.5) * scale;
}

/** Fractional voxel coordinate of a canvas pixel, clamped into the volume. */
export function canvasToVoxel(c: number, scale: number, n: number): number {
  const v = c / scale - 0.5;
  return Math.min(Math.max(v, 0), n - 1);
}

/** The subset of CanvasRenderingContext2D the overlay needs; tests pass a
 * recording fake. */
export interface OverlayContext {
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
}

/** Seeds that belong on the given axial slice (|z - slice| <= 0.5). */
export function markersOnSlice(primary: Seed | null, extras: Seed[], slice: number): {
  primary: Seed | null;
  extras: Seed[];
} {
  const near = (s: Seed) => Math.abs(s.z - slice) <= 0.5;
  return {
    primary: primary && near(primary) ? primary : null,
    extras: extras.filter(near),
  };
}

export function drawContours(
  ctx: OverlayContext,
  polylines: number[][][],
  scale: number,
  color = "#ffd21f",
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  for (const loop of polylines) {
    if (loop.length < 2) continue;
    ctx.beginPath();
    ctx.moveTo(voxelToCanvas(loop[0][0], scale), voxelToCanvas(loop[0][1], scale));
    for (let i = 1; i < loop.length; i++) {
      ctx.lineTo(voxelToCanvas(loop[i][0], scale), voxelToCanvas(loop[i][1], scale));
    }
    ctx.stroke();
  }
}

export function drawMarkers(
  ctx: OverlayContext,
  primary: Seed | null,
  extras: Seed[],
  slice: number,
  scale: number,
): void {
  const visible = markersOnSlice(primary, extras, slice);
  if (visible.primary) {
    const cx = voxelToCanvas(visible.primary.x, scale);
    const cy = voxelToCanvas(visible.primary.y, scale);
    const arm = Math.max(scale, 5);
    ctx.strokeStyle = "#3fa9f5";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(cx - arm, cy);
    ctx.lineTo(cx + arm, cy);
    ctx.moveTo(cx, cy - arm);
    ctx.lineTo(cx, cy + arm);
    ctx.stroke();
  }
  ctx.fillStyle = "#f1453d";
  for (const s of visible.extras) {
    ctx.beginPath();
    ctx.arc(voxelToCanvas(s.x, scale), voxelToCanvas(s.y, scale), Math.max(scale * 0.4, 3), 0, 2 * Math.PI);
    ctx.fill();
  }
}
