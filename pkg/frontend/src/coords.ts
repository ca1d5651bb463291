/**
 * Display <-> pixel coordinate mapping for the image canvas.
 *
 * The canvas shows an image of imageWidth x imageHeight pixels stretched to
 * displayWidth x displayHeight CSS pixels. Click positions arrive in display
 * coordinates (offsetX/offsetY) and must be mapped to integer pixel indices;
 * point markers go the other way. At integer zoom factors the two mappings
 * round-trip exactly: a marker drawn at a pixel's center maps back to the
 * same pixel.
 */

/** Geometry of the displayed image. */
export interface Viewport {
  /** Natural image size in pixels. */
  imageWidth: number;
  imageHeight: number;
  /** Rendered size in CSS pixels. */
  displayWidth: number;
  displayHeight: number;
}

/** Image pixel position as row/col indices. */
export interface PixelPos {
  row: number;
  col: number;
}

/** Display position in CSS pixels relative to the canvas origin. */
export interface DisplayPos {
  x: number;
  y: number;
}

/**
 * Map a click in display coordinates to the pixel under the cursor.
 * Returns null when the click falls outside the canvas.
 */
export function displayToPixel(v: Viewport, pos: DisplayPos): PixelPos | null {
  if (pos.x < 0 || pos.y < 0 || pos.x >= v.displayWidth || pos.y >= v.displayHeight) {
    return null;
  }
  const col = Math.floor((pos.x * v.imageWidth) / v.displayWidth);
  const row = Math.floor((pos.y * v.imageHeight) / v.displayHeight);
  // floor can only reach the upper edge through float residue; clamp it off
  return {
    row: Math.min(row, v.imageHeight - 1),
    col: Math.min(col, v.imageWidth - 1),
  };
}

/** Display position of a pixel's center, for marker placement. */
export function pixelToDisplay(v: Viewport, pos: PixelPos): DisplayPos {
  return {
    x: ((pos.col + 0.5) * v.displayWidth) / v.imageWidth,
    y: ((pos.row + 0.5) * v.displayHeight) / v.imageHeight,
  };
}
