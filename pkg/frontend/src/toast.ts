/**
 * Transient notification toasts, used for server errors and input hints.
 */

const TOAST_MS = 6000;

let region: HTMLElement | null = null;

/** Attach the toast region to the document; idempotent. */
export function installToasts(doc: Document): HTMLElement {
  if (region && region.ownerDocument === doc && region.isConnected) {
    return region;
  }
  region = doc.createElement("div");
  region.className = "toast-region";
  region.setAttribute("role", "status");
  doc.body.appendChild(region);
  return region;
}

/** Show a message; error toasts stay until dismissed or replaced. */
export function toast(message: string, kind: "error" | "info" = "error"): HTMLElement {
  if (!region) throw new Error("installToasts() has not run");
  const el = region.ownerDocument.createElement("div");
  el.className = `toast toast-${kind}`;
  el.textContent = message;
  el.addEventListener("click", () => el.remove());
  region.appendChild(el);
  setTimeout(() => el.remove(), TOAST_MS);
  return el;
}
