/** Click handling on slice views: pixel -> cell -> vertex -> label.
 *
 * Slices arrive as row-major planes. Orientation facts, fixed by the
 * service: axis z gives shape (ny, nx) with rows along y; axis y gives
 * (nz, nx) with rows along z; axis x gives (nz, ny) with rows along z.
 * The canvas draws row 0 at the top and column 0 at the left.
 */

import type { SlicePayload } from "./types.js";

export interface Cell {
  row: number;
  col: number;
}

/** Map a canvas pixel to a slice cell; null when outside the canvas. */
export function pixelToCell(
  px: number,
  py: number,
  width: number,
  height: number,
  shape: [number, number],
): Cell | null {
  const [rows, cols] = shape;
  if (px < 0 || py < 0 || px >= width || py >= height) return null;
  const col = Math.min(cols - 1, Math.floor((px / width) * cols));
  const row = Math.min(rows - 1, Math.floor((py / height) * rows));
  return { row, col };
}

export function cellValue(payload: SlicePayload, cell: Cell): number {
  const [rows, cols] = payload.shape;
  if (cell.row < 0 || cell.row >= rows || cell.col < 0 || cell.col >= cols) {
    throw new RangeError(`cell (${cell.row}, ${cell.col}) outside ${rows}x${cols}`);
  }
  return payload.values[cell.row * cols + cell.col] as number;
}

/** Flat vertex index (x fastest, then y, then z) of a slice cell. */
export function cellToVertex(
  dims: [number, number, number],
  axis: "x" | "y" | "z",
  sliceIndex: number,
  cell: Cell,
): number {
  const [nx, ny] = dims;
  switch (axis) {
    case "z":
      return sliceIndex * nx * ny + cell.row * nx + cell.col;
    case "y":
      return cell.row * nx * ny + sliceIndex * nx + cell.col;
    case "x":
      return cell.row * nx * ny + cell.col * nx + sliceIndex;
  }
}

export interface Pick {
  cell: Cell;
  vertex: number;
  value: number;
}

/** Everything a click needs: the cell, its vertex, and its value. */
export function pickAt(
  payload: SlicePayload,
  dims: [number, number, number],
  px: number,
  py: number,
  width: number,
  height: number,
): Pick | null {
  const cell = pixelToCell(px, py, width, height, payload.shape);
  if (cell === null) return null;
  return {
    cell,
    vertex: cellToVertex(dims, payload.axis, payload.index, cell),
    value: cellValue(payload, cell),
  };
}

/** Number of slices along an axis, for scrubber bounds. */
export function axisExtent(
  dims: [number, number, number],
  axis: "x" | "y" | "z",
): number {
  return dims[{ x: 0, y: 1, z: 2 }[axis]] as number;
}
