import { describe, expect, it } from "vitest";

import type { Viewport } from "../src/coords.js";
import {
  activeTime,
  initialViewState,
  placePoint,
  removePoint,
  setSlider,
  SLIDERS,
} from "../src/state.js";

const VIEW: Viewport = { imageWidth: 256, imageHeight: 256, displayWidth: 512, displayHeight: 512 };

function loadedState() {
  const state = initialViewState();
  state.sessionId = "s-000001";
  state.imageWidth = 256;
  state.imageHeight = 256;
  return state;
}

describe("slider state", () => {
  it("initializes every slider to the detector defaults", () => {
    const state = initialViewState();
    expect(state.sliders).toEqual({
      change_angle_threshold: 145,
      stability_threshold: 0.93,
      max_area_fraction: 0.9,
      object_similarity_threshold: 60,
    });
  });

  it("declares hard bounds matching the matching-parameter ranges", () => {
    const byName = Object.fromEntries(SLIDERS.map((s) => [s.name, s]));
    expect(byName.change_angle_threshold).toMatchObject({ min: 0, max: 180 });
    expect(byName.stability_threshold).toMatchObject({ min: 0, max: 1 });
    expect(byName.max_area_fraction).toMatchObject({ max: 1 });
    expect(byName.max_area_fraction.min).toBeGreaterThan(0);
    expect(byName.object_similarity_threshold).toMatchObject({ min: 0, max: 180 });
  });

  it("clamps out-of-range values instead of storing them", () => {
    const state = initialViewState();
    expect(setSlider(state, "change_angle_threshold", 500)).toBe(180);
    expect(setSlider(state, "change_angle_threshold", -40)).toBe(0);
    expect(setSlider(state, "stability_threshold", 1.4)).toBe(1);
    expect(state.sliders.change_angle_threshold).toBe(0);
    expect(state.sliders.stability_threshold).toBe(1);
  });

  it("rejects unknown names and non-finite values", () => {
    const state = initialViewState();
    setSlider(state, "nope", 3);
    expect(state.sliders.nope).toBeUndefined();
    setSlider(state, "change_angle_threshold", Number.NaN);
    expect(state.sliders.change_angle_threshold).toBe(145);
  });
});

describe("point placement", () => {
  it("is a no-op before a pair is loaded", () => {
    const state = initialViewState();
    state.sessionId = "s-000001";
    expect(placePoint(state, VIEW, { x: 10, y: 10 })).toBeNull();
    expect(state.points).toEqual([]);
  });

  it("appends pixel-mapped points tagged with the active time", () => {
    const state = loadedState();
    const first = placePoint(state, VIEW, { x: 256, y: 256 });
    expect(first).toEqual({ row: 128, col: 128, time: "t1" });
    state.active = "B";
    expect(activeTime(state)).toBe("t2");
    const second = placePoint(state, VIEW, { x: 0, y: 511 });
    expect(second).toEqual({ row: 255, col: 0, time: "t2" });
    expect(state.points).toEqual([first, second]);
  });

  it("ignores clicks outside the canvas without touching state", () => {
    const state = loadedState();
    placePoint(state, VIEW, { x: 100, y: 100 });
    expect(placePoint(state, VIEW, { x: 513, y: 10 })).toBeNull();
    expect(placePoint(state, VIEW, { x: -2, y: 10 })).toBeNull();
    expect(state.points).toHaveLength(1);
  });

  it("removes points individually, preserving order of the rest", () => {
    const state = loadedState();
    placePoint(state, VIEW, { x: 10, y: 10 });
    placePoint(state, VIEW, { x: 400, y: 30 });
    placePoint(state, VIEW, { x: 50, y: 500 });
    const second = state.points[1];
    const third = state.points[2];
    removePoint(state, 0);
    expect(state.points).toEqual([second, third]);
    removePoint(state, 5);
    expect(state.points).toHaveLength(2);
  });

  it("keeps every stored point inside the image bounds", () => {
    const state = loadedState();
    for (let i = 0; i < 2000; i += 1) {
      placePoint(state, VIEW, {
        x: Math.random() * 700 - 50,
        y: Math.random() * 700 - 50,
      });
    }
    expect(state.points.length).toBeGreaterThan(0);
    for (const p of state.points) {
      expect(p.row).toBeGreaterThanOrEqual(0);
      expect(p.row).toBeLessThan(256);
      expect(p.col).toBeGreaterThanOrEqual(0);
      expect(p.col).toBeLessThan(256);
    }
  });
});
