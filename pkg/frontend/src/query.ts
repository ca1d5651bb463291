/**
 * Point-query panel: threshold sliders, the point list and query results.
 *
 * Sliders are range inputs hard-bound to the matching-parameter ranges and
 * pre-filled with the detector defaults. Results render as proposal chips
 * whose hover titles carry the server-reported change angles; the returned
 * mask is handed to the viewer as a toggleable overlay.
 */

import { ApiClient } from "./api.js";
import { removePoint, setSlider, SLIDERS, type ViewState } from "./state.js";

export interface QueryHooks {
  onBusyChange?: (busy: boolean) => void;
  notify?: (message: string) => void;
  /** Fired after a point is removed so markers can be redrawn. */
  onPointsChanged?: () => void;
  /** Receives the mask artifact name after a successful query. */
  onMask?: (artifact: string) => void;
  /** Fired when the overlay visibility toggle flips. */
  onOverlayToggle?: (visible: boolean) => void;
}

export interface QueryPanel {
  root: HTMLElement;
  runButton: HTMLButtonElement;
  overlayToggle: HTMLInputElement;
  sliderInputs: Record<string, HTMLInputElement>;
  pointsEl: HTMLElement;
  resultEl: HTMLElement;
  /** Re-render the point list from the view state. */
  refreshPoints(): void;
  run(): Promise<void>;
}

function buildSliderRow(
  doc: Document,
  state: ViewState,
  name: string,
): { row: HTMLElement; input: HTMLInputElement } {
  const spec = SLIDERS.find((s) => s.name === name)!;
  const row = doc.createElement("label");
  row.className = "slider-row";
  const caption = doc.createElement("span");
  caption.textContent = spec.label;
  const input = doc.createElement("input");
  input.type = "range";
  input.name = spec.name;
  input.min = String(spec.min);
  input.max = String(spec.max);
  input.step = String(spec.step);
  input.value = String(state.sliders[spec.name]);
  const value = doc.createElement("output");
  value.textContent = input.value;
  input.addEventListener("input", () => {
    const kept = setSlider(state, spec.name, Number(input.value));
    input.value = String(kept);
    value.textContent = String(kept);
  });
  row.appendChild(caption);
  row.appendChild(input);
  row.appendChild(value);
  return { row, input };
}

function renderResult(panel: QueryPanel, doc: Document, reply: {
  summary: string;
  category: string[];
  changed: string[];
  angles: Record<string, number>;
}): void {
  panel.resultEl.textContent = "";
  const summary = doc.createElement("p");
  summary.className = "query-summary";
  summary.textContent = reply.summary;
  panel.resultEl.appendChild(summary);
  const chips = doc.createElement("div");
  chips.className = "chips";
  const changed = new Set(reply.changed);
  for (const id of reply.category) {
    const chip = doc.createElement("span");
    chip.className = changed.has(id) ? "chip chip-changed" : "chip";
    chip.textContent = id;
    const angle = reply.angles[id];
    if (angle !== undefined) {
      chip.title = `change angle ${angle.toFixed(1)}°`;
    }
    chips.appendChild(chip);
  }
  panel.resultEl.appendChild(chips);
}

/** Build the query panel inside `root` and wire it to the API. */
export function mountQueryPanel(
  root: HTMLElement,
  api: ApiClient,
  state: ViewState,
  hooks: QueryHooks = {},
): QueryPanel {
  const doc = root.ownerDocument;
  const sliderBox = doc.createElement("div");
  sliderBox.className = "sliders";
  const sliderInputs: Record<string, HTMLInputElement> = {};
  for (const spec of SLIDERS) {
    const { row, input } = buildSliderRow(doc, state, spec.name);
    sliderBox.appendChild(row);
    sliderInputs[spec.name] = input;
  }

  const pointsEl = doc.createElement("ul");
  pointsEl.className = "points";

  const controls = doc.createElement("div");
  controls.className = "query-controls";
  const runButton = doc.createElement("button");
  runButton.type = "button";
  runButton.textContent = "run point query";
  const toggleLabel = doc.createElement("label");
  toggleLabel.className = "overlay-toggle";
  const overlayToggle = doc.createElement("input");
  overlayToggle.type = "checkbox";
  overlayToggle.checked = state.overlayVisible;
  toggleLabel.appendChild(overlayToggle);
  toggleLabel.appendChild(doc.createTextNode(" show mask overlay"));
  controls.appendChild(runButton);
  controls.appendChild(toggleLabel);

  const resultEl = doc.createElement("div");
  resultEl.className = "query-result";

  root.appendChild(sliderBox);
  root.appendChild(pointsEl);
  root.appendChild(controls);
  root.appendChild(resultEl);

  const panel: QueryPanel = {
    root,
    runButton,
    overlayToggle,
    sliderInputs,
    pointsEl,
    resultEl,
    refreshPoints(): void {
      pointsEl.textContent = "";
      state.points.forEach((p, idx) => {
        const item = doc.createElement("li");
        item.className = "point-item";
        const tag = doc.createElement("span");
        tag.textContent = `(${p.row}, ${p.col}) ${p.time}`;
        const remove = doc.createElement("button");
        remove.type = "button";
        remove.className = "remove-point";
        remove.textContent = "×";
        remove.addEventListener("click", () => {
          removePoint(state, idx);
          panel.refreshPoints();
          hooks.onPointsChanged?.();
        });
        item.appendChild(tag);
        item.appendChild(remove);
        pointsEl.appendChild(item);
      });
    },
    async run(): Promise<void> {
      if (state.busy) return;
      if (state.sessionId === null) {
        hooks.notify?.("no session yet; reload the page");
        return;
      }
      if (state.proposalCount === 0) {
        hooks.notify?.("upload a proposal file before running a point query");
        return;
      }
      if (state.points.length === 0) {
        hooks.notify?.("place at least one point on the image first");
        return;
      }
      state.busy = true;
      runButton.disabled = true;
      hooks.onBusyChange?.(true);
      try {
        const reply = await api.pointQuery(state.sessionId, state.points, state.sliders);
        renderResult(panel, doc, reply);
        hooks.onMask?.(reply.mask);
      } catch (err) {
        hooks.notify?.(err instanceof Error ? err.message : String(err));
      } finally {
        state.busy = false;
        runButton.disabled = false;
        hooks.onBusyChange?.(false);
      }
    },
  };

  runButton.addEventListener("click", () => void panel.run());
  overlayToggle.addEventListener("change", () => {
    state.overlayVisible = overlayToggle.checked;
    hooks.onOverlayToggle?.(overlayToggle.checked);
  });
  panel.refreshPoints();
  return panel;
}
