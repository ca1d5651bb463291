/**
 * Mask overlay presentation: the agreement legend and mask tinting.
 *
 * Comparison overlays arrive from the server already painted; the UI only
 * displays them and explains the palette. Binary change masks arrive as
 * grayscale PNGs and are tinted client-side for stacking over the imagery —
 * a pure recoloring, the pixels themselves are server truth.
 */

/** RGB triple as served in overlay artifacts. */
export type Rgb = readonly [number, number, number];

export interface LegendEntry {
  color: Rgb;
  label: string;
}

/** Palette of the server's comparison overlays. */
export const OVERLAY_LEGEND: readonly LegendEntry[] = [
  { color: [255, 255, 0], label: "agreement" },
  { color: [255, 0, 0], label: "false alarm" },
  { color: [0, 255, 0], label: "miss" },
];

/** Tint used when stacking a binary change mask over the imagery. */
export const MASK_TINT: Rgb = [255, 80, 40];
export const MASK_TINT_ALPHA = 160;

export function cssColor(rgb: Rgb): string {
  return `rgb(${rgb[0]}, ${rgb[1]}, ${rgb[2]})`;
}

/** Artifact names that carry a painted comparison overlay. */
export function isOverlayArtifact(name: string): boolean {
  return name.startsWith("overlay-");
}

/**
 * Build the yellow/red/green legend shown next to comparison overlays.
 * Each swatch records its RGB triple in data-rgb for styling and tests.
 */
export function buildLegend(doc: Document): HTMLElement {
  const list = doc.createElement("ul");
  list.className = "overlay-legend";
  for (const entry of OVERLAY_LEGEND) {
    const item = doc.createElement("li");
    const swatch = doc.createElement("span");
    swatch.className = "legend-swatch";
    swatch.dataset.rgb = entry.color.join(",");
    swatch.style.backgroundColor = cssColor(entry.color);
    item.appendChild(swatch);
    item.appendChild(doc.createTextNode(" " + entry.label));
    list.appendChild(item);
  }
  return list;
}

/**
 * Recolor a grayscale mask into a translucent tint, in place.
 * Nonzero pixels become the tint color; zero pixels become transparent.
 */
export function tintMask(image: ImageData): ImageData {
  const px = image.data;
  for (let i = 0; i < px.length; i += 4) {
    const on = px[i] > 0 || px[i + 1] > 0 || px[i + 2] > 0;
    px[i] = MASK_TINT[0];
    px[i + 1] = MASK_TINT[1];
    px[i + 2] = MASK_TINT[2];
    px[i + 3] = on ? MASK_TINT_ALPHA : 0;
  }
  return image;
}
