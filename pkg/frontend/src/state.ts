/**
 * View state for the analysis workbench.
 *
 * One plain object holds everything the panels render from: the session,
 * the loaded pair's dimensions, placed point prompts, threshold sliders and
 * the chat transcript. Panels mutate it through the helpers here so the two
 * invariants hold everywhere: slider values stay inside their hard bounds
 * and points stay inside the image.
 */

import { displayToPixel, type DisplayPos, type Viewport } from "./coords.js";

/** Which layer the viewer currently shows. */
export type ActiveImage = "A" | "B" | "overlay";

/** Acquisition time a point prompt refers to. */
export type TimeTag = "t1" | "t2";

/** A point prompt in pixel coordinates with its time tag. */
export interface PlacedPoint {
  row: number;
  col: number;
  time: TimeTag;
}

/** One chat turn as rendered in the transcript. */
export interface TranscriptEntry {
  role: "user" | "assistant";
  text: string;
  /** Artifact names attached to the turn, in server order. */
  artifacts: string[];
}

/** Range-input definition for one matching threshold. */
export interface SliderSpec {
  /** Matching-parameter field name; doubles as the request-body key. */
  name: string;
  label: string;
  min: number;
  max: number;
  step: number;
  initial: number;
}

/**
 * The four tunable thresholds, pre-filled with the detector defaults
 * (145 / 0.93 / 0.9 / 60). Bounds mirror the server-side parameter
 * invariants so an out-of-range request is unrepresentable.
 */
export const SLIDERS: readonly SliderSpec[] = [
  { name: "change_angle_threshold", label: "change angle ≥", min: 0, max: 180, step: 1, initial: 145 },
  { name: "stability_threshold", label: "stability ≥", min: 0, max: 1, step: 0.01, initial: 0.93 },
  { name: "max_area_fraction", label: "max area fraction", min: 0.01, max: 1, step: 0.01, initial: 0.9 },
  { name: "object_similarity_threshold", label: "similarity angle ≤", min: 0, max: 180, step: 1, initial: 60 },
];

export interface ViewState {
  sessionId: string | null;
  active: ActiveImage;
  points: PlacedPoint[];
  sliders: Record<string, number>;
  transcript: TranscriptEntry[];
  /** Pixel size of the loaded pair; null until an upload succeeds. */
  imageWidth: number | null;
  imageHeight: number | null;
  /** Proposals uploaded for this session (0 = none yet). */
  proposalCount: number;
  /** Whether the last returned mask is drawn over the image. */
  overlayVisible: boolean;
  /** True while an analysis request is in flight; panels disable inputs. */
  busy: boolean;
}

export function initialViewState(): ViewState {
  const sliders: Record<string, number> = {};
  for (const s of SLIDERS) sliders[s.name] = s.initial;
  return {
    sessionId: null,
    active: "A",
    points: [],
    sliders,
    transcript: [],
    imageWidth: null,
    imageHeight: null,
    proposalCount: 0,
    overlayVisible: true,
    busy: false,
  };
}

/** Clamp a slider to its declared bounds and store it; returns the value kept. */
export function setSlider(state: ViewState, name: string, value: number): number {
  const spec = SLIDERS.find((s) => s.name === name);
  if (!spec || !Number.isFinite(value)) {
    return state.sliders[name];
  }
  const clamped = Math.min(spec.max, Math.max(spec.min, value));
  state.sliders[name] = clamped;
  return clamped;
}

/** Time tag a click refers to: the A layer is t1, everything else t2. */
export function activeTime(state: ViewState): TimeTag {
  return state.active === "A" ? "t1" : "t2";
}

/**
 * Append a point prompt from a click in display coordinates.
 * Returns the placed point, or null when the click must be ignored
 * (no pair loaded yet, or the click falls outside the canvas).
 */
export function placePoint(
  state: ViewState,
  viewport: Viewport,
  pos: DisplayPos,
): PlacedPoint | null {
  if (state.imageWidth === null || state.imageHeight === null) return null;
  const pixel = displayToPixel(viewport, pos);
  if (pixel === null) return null;
  const point: PlacedPoint = { row: pixel.row, col: pixel.col, time: activeTime(state) };
  state.points.push(point);
  return point;
}

/** Remove a single point by its position in the ordered list. */
export function removePoint(state: ViewState, index: number): void {
  if (index >= 0 && index < state.points.length) {
    state.points.splice(index, 1);
  }
}
