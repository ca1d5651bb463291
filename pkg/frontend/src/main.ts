/**
 * Page wiring: session bootstrap, uploads, the layer viewer and panels.
 *
 * All analysis happens server-side; this module moves bytes and pixels
 * between the API and the DOM. The viewer stacks the active image, the
 * tinted change mask and the point markers; clicks on the stack become
 * point prompts in pixel coordinates.
 */

import { ApiClient, ApiError } from "./api.js";
import { mountChatPanel } from "./chat.js";
import { pixelToDisplay, type Viewport } from "./coords.js";
import { tintMask } from "./overlay.js";
import { mountQueryPanel, type QueryPanel } from "./query.js";
import { initialViewState, placePoint, type ActiveImage } from "./state.js";
import { installToasts, toast } from "./toast.js";

const api = new ApiClient("");
const state = initialViewState();

// object URLs of the uploaded pair, keyed by layer
const layerUrls: { A: string | null; B: string | null } = { A: null, B: null };
let maskUrl: string | null = null;
let queryPanel: QueryPanel | null = null;

const stack = document.getElementById("stack") as HTMLDivElement;
const viewImage = document.getElementById("view-image") as HTMLImageElement;
const maskLayer = document.getElementById("mask-layer") as HTMLCanvasElement;

function viewport(): Viewport | null {
  if (state.imageWidth === null || state.imageHeight === null) return null;
  const rect = viewImage.getBoundingClientRect();
  if (rect.width === 0 || rect.height === 0) return null;
  return {
    imageWidth: state.imageWidth,
    imageHeight: state.imageHeight,
    displayWidth: rect.width,
    displayHeight: rect.height,
  };
}

function renderMarkers(): void {
  for (const el of Array.from(stack.querySelectorAll(".point-marker"))) el.remove();
  const v = viewport();
  if (v === null) return;
  state.points.forEach((p, idx) => {
    const marker = document.createElement("div");
    marker.className = `point-marker ${p.time}`;
    const at = pixelToDisplay(v, p);
    marker.style.left = `${at.x}px`;
    marker.style.top = `${at.y}px`;
    marker.title = `(${p.row}, ${p.col}) ${p.time} — click to remove`;
    marker.addEventListener("click", (ev) => {
      ev.stopPropagation();
      state.points.splice(idx, 1);
      renderMarkers();
      queryPanel?.refreshPoints();
    });
    stack.appendChild(marker);
  });
}

function setLayer(layer: ActiveImage): void {
  state.active = layer;
  for (const btn of document.querySelectorAll<HTMLButtonElement>("#layer-tabs button")) {
    btn.classList.toggle("active", btn.dataset.layer === layer);
  }
  const url = layer === "A" ? layerUrls.A : layerUrls.B;
  if (url) viewImage.src = url;
  // the overlay tab forces the mask layer on; A/B honor the toggle
  maskLayer.style.display =
    maskUrl && (layer === "overlay" || state.overlayVisible) ? "block" : "none";
}

function drawMask(url: string): void {
  const img = new Image();
  img.onload = () => {
    maskLayer.width = img.naturalWidth;
    maskLayer.height = img.naturalHeight;
    const ctx = maskLayer.getContext("2d");
    if (!ctx) return;
    ctx.drawImage(img, 0, 0);
    const data = ctx.getImageData(0, 0, maskLayer.width, maskLayer.height);
    ctx.putImageData(tintMask(data), 0, 0);
    setLayer(state.active);
  };
  img.src = url;
}

function notifyError(message: string): void {
  toast(message, "error");
}

function wireUploadForms(): void {
  const pairForm = document.getElementById("pair-form") as HTMLFormElement;
  pairForm.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    if (state.sessionId === null) return;
    const data = new FormData(pairForm);
    const imageA = data.get("image_a") as File | null;
    const imageB = data.get("image_b") as File | null;
    if (!imageA || !imageB || imageA.size === 0 || imageB.size === 0) {
      toast("choose both images of the pair", "info");
      return;
    }
    const groundTruth = data.get("ground_truth") as File | null;
    const prediction = data.get("prediction") as File | null;
    const caption = data.get("human_caption");
    try {
      const summary = await api.uploadPair(state.sessionId, {
        imageA,
        imageB,
        groundTruth: groundTruth && groundTruth.size > 0 ? groundTruth : undefined,
        prediction: prediction && prediction.size > 0 ? prediction : undefined,
        humanCaption: typeof caption === "string" && caption !== "" ? caption : undefined,
      });
      state.imageWidth = summary.width;
      state.imageHeight = summary.height;
      state.points = [];
      if (layerUrls.A) URL.revokeObjectURL(layerUrls.A);
      if (layerUrls.B) URL.revokeObjectURL(layerUrls.B);
      layerUrls.A = URL.createObjectURL(imageA);
      layerUrls.B = URL.createObjectURL(imageB);
      setLayer("A");
      renderMarkers();
      queryPanel?.refreshPoints();
      toast(`pair loaded: ${summary.width}×${summary.height}` +
        (summary.ground_truth ? ", with ground truth" : ""), "info");
    } catch (err) {
      notifyError(err instanceof ApiError ? err.message : String(err));
    }
  });

  const proposalForm = document.getElementById("proposal-form") as HTMLFormElement;
  proposalForm.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    if (state.sessionId === null) return;
    const file = new FormData(proposalForm).get("file") as File | null;
    if (!file || file.size === 0) {
      toast("choose a proposal file", "info");
      return;
    }
    try {
      const summary = await api.uploadProposals(state.sessionId, file);
      state.proposalCount = summary.count;
      toast(`${summary.count} proposals loaded ` +
        `(${summary.width}×${summary.height}, dim ${summary.embedding_dim})`, "info");
    } catch (err) {
      notifyError(err instanceof ApiError ? err.message : String(err));
    }
  });
}

function wireViewer(): void {
  for (const btn of document.querySelectorAll<HTMLButtonElement>("#layer-tabs button")) {
    btn.addEventListener("click", () => {
      setLayer(btn.dataset.layer as ActiveImage);
      renderMarkers();
    });
  }
  stack.addEventListener("click", (ev) => {
    const v = viewport();
    if (v === null) {
      toast("load an image pair first", "info");
      return;
    }
    const rect = viewImage.getBoundingClientRect();
    const placed = placePoint(state, v, {
      x: ev.clientX - rect.left,
      y: ev.clientY - rect.top,
    });
    if (placed === null) {
      toast("click inside the image to place a point", "info");
      return;
    }
    renderMarkers();
    queryPanel?.refreshPoints();
  });
}

async function boot(): Promise<void> {
  installToasts(document);
  wireUploadForms();
  wireViewer();

  const chat = mountChatPanel(
    document.getElementById("chat-panel") as HTMLElement,
    api,
    state,
    { notify: notifyError, onBusyChange: (b) => { if (queryPanel) queryPanel.runButton.disabled = b; } },
  );
  queryPanel = mountQueryPanel(
    document.getElementById("query-panel") as HTMLElement,
    api,
    state,
    {
      notify: notifyError,
      onBusyChange: (b) => {
        chat.input.disabled = b;
        chat.sendButton.disabled = b || chat.input.value.trim() === "";
      },
      onPointsChanged: renderMarkers,
      onMask: (artifact) => {
        if (state.sessionId === null) return;
        maskUrl = api.artifactUrl(state.sessionId, artifact);
        drawMask(maskUrl);
      },
      onOverlayToggle: () => setLayer(state.active),
    },
  );

  try {
    state.sessionId = await api.newSession();
  } catch (err) {
    notifyError(`could not start a session: ${err instanceof Error ? err.message : err}`);
    return;
  }
  try {
    const health = await api.health();
    const el = document.getElementById("health");
    if (el) el.textContent = `backend ${health.backend} · v${health.version}`;
  } catch {
    // banner only; the session is already usable
  }
}

void boot();
