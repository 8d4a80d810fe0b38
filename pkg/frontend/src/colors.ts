/** Deterministic categorical colors shared by legend and slice overlay.
 *
 * Both views call the same function with the same segment id, so the
 * color-to-segment correspondence is a bijection by construction. Hues
 * advance by the golden angle; lightness and saturation step through
 * small cycles so nearby ids stay distinguishable.
 */

export const BACKGROUND_COLOR = "#222222";

const GOLDEN_ANGLE = 137.50776405003785;
const LIGHTNESS = [0.58, 0.42, 0.72];
const SATURATION = [0.72, 0.55];

function hslToRgb(h: number, s: number, l: number): [number, number, number] {
  const c = (1 - Math.abs(2 * l - 1)) * s;
  const hp = (((h % 360) + 360) % 360) / 60;
  const x = c * (1 - Math.abs((hp % 2) - 1));
  let rgb: [number, number, number];
  if (hp < 1) rgb = [c, x, 0];
  else if (hp < 2) rgb = [x, c, 0];
  else if (hp < 3) rgb = [0, c, x];
  else if (hp < 4) rgb = [0, x, c];
  else if (hp < 5) rgb = [x, 0, c];
  else rgb = [c, 0, x];
  const m = l - c / 2;
  return [rgb[0] + m, rgb[1] + m, rgb[2] + m];
}

function toHex(v: number): string {
  const b = Math.max(0, Math.min(255, Math.round(v * 255)));
  return b.toString(16).padStart(2, "0");
}

/** Hex color for a segment id; ids < 0 (background) map to dark gray. */
export function segmentColor(id: number): string {
  if (id < 0) return BACKGROUND_COLOR;
  const h = (id * GOLDEN_ANGLE) % 360;
  const l = LIGHTNESS[id % LIGHTNESS.length] as number;
  const s = SATURATION[id % SATURATION.length] as number;
  const [r, g, b] = hslToRgb(h, s, l);
  return `#${toHex(r)}${toHex(g)}${toHex(b)}`;
}

/** RGB triple (0-255) for canvas pixel writes. */
export function segmentRgb(id: number): [number, number, number] {
  const hex = segmentColor(id);
  return [
    parseInt(hex.slice(1, 3), 16),
    parseInt(hex.slice(3, 5), 16),
    parseInt(hex.slice(5, 7), 16),
  ];
}

/** Grayscale ramp for scalar field slices, t in [0, 1]. */
export function grayRgb(t: number): [number, number, number] {
  const v = Math.max(0, Math.min(255, Math.round(t * 255)));
  return [v, v, v];
}
