/**
 * Chat panel: transcript rendering and message dispatch.
 *
 * Replies and their artifact thumbnails render inline in server order;
 * comparison overlays get the agreement legend attached. A failed send
 * leaves the transcript untouched and offers a retry button instead.
 */

import { ApiClient } from "./api.js";
import { buildLegend, isOverlayArtifact } from "./overlay.js";
import type { TranscriptEntry, ViewState } from "./state.js";

export interface ChatHooks {
  /** Called when an analysis request starts or settles. */
  onBusyChange?: (busy: boolean) => void;
  /** Error reporter; defaults to a console warning when absent. */
  notify?: (message: string) => void;
}

export interface ChatPanel {
  root: HTMLElement;
  input: HTMLInputElement;
  sendButton: HTMLButtonElement;
  transcriptEl: HTMLElement;
  /** Send a message programmatically, as the form submit does. */
  send(message: string): Promise<void>;
}

function setBusy(state: ViewState, panel: ChatPanel, hooks: ChatHooks, busy: boolean): void {
  state.busy = busy;
  panel.sendButton.disabled = busy || panel.input.value.trim() === "";
  panel.input.disabled = busy;
  hooks.onBusyChange?.(busy);
}

function renderEntry(panel: ChatPanel, api: ApiClient, state: ViewState, entry: TranscriptEntry): void {
  const doc = panel.root.ownerDocument;
  const row = doc.createElement("div");
  row.className = `msg msg-${entry.role}`;
  const text = doc.createElement("p");
  text.textContent = entry.text;
  row.appendChild(text);
  for (const name of entry.artifacts) {
    const thumb = doc.createElement("img");
    thumb.className = "artifact-thumb";
    thumb.alt = name;
    thumb.src = api.artifactUrl(state.sessionId ?? "", name);
    row.appendChild(thumb);
    if (isOverlayArtifact(name)) {
      row.appendChild(buildLegend(doc));
    }
  }
  panel.transcriptEl.appendChild(row);
  panel.transcriptEl.scrollTop = panel.transcriptEl.scrollHeight;
}

function renderRetry(panel: ChatPanel, message: string, reason: string): void {
  const doc = panel.root.ownerDocument;
  const row = doc.createElement("div");
  row.className = "msg msg-error";
  const text = doc.createElement("p");
  text.textContent = `message not sent: ${reason}`;
  row.appendChild(text);
  const retry = doc.createElement("button");
  retry.type = "button";
  retry.className = "retry";
  retry.textContent = "retry";
  retry.addEventListener("click", () => {
    row.remove();
    void panel.send(message);
  });
  row.appendChild(retry);
  panel.transcriptEl.appendChild(row);
}

/** Build the chat panel inside `root` and wire it to the API. */
export function mountChatPanel(
  root: HTMLElement,
  api: ApiClient,
  state: ViewState,
  hooks: ChatHooks = {},
): ChatPanel {
  const doc = root.ownerDocument;
  const transcriptEl = doc.createElement("div");
  transcriptEl.className = "transcript";
  const form = doc.createElement("form");
  form.className = "chat-form";
  const input = doc.createElement("input");
  input.type = "text";
  input.name = "message";
  input.autocomplete = "off";
  input.placeholder = "ask about the loaded pair…";
  const sendButton = doc.createElement("button");
  sendButton.type = "submit";
  sendButton.textContent = "send";
  sendButton.disabled = true;
  form.appendChild(input);
  form.appendChild(sendButton);
  root.appendChild(transcriptEl);
  root.appendChild(form);

  const panel: ChatPanel = {
    root,
    input,
    sendButton,
    transcriptEl,
    async send(message: string): Promise<void> {
      const text = message.trim();
      if (text === "" || state.busy) return;
      if (state.sessionId === null) {
        hooks.notify?.("no session yet; reload the page");
        return;
      }
      setBusy(state, panel, hooks, true);
      try {
        const reply = await api.chat(state.sessionId, text);
        const user: TranscriptEntry = { role: "user", text, artifacts: [] };
        const assistant: TranscriptEntry = {
          role: "assistant",
          text: reply.reply,
          artifacts: reply.artifacts,
        };
        state.transcript.push(user, assistant);
        renderEntry(panel, api, state, user);
        renderEntry(panel, api, state, assistant);
        input.value = "";
      } catch (err) {
        const reason = err instanceof Error ? err.message : String(err);
        renderRetry(panel, text, reason);
        hooks.notify?.(reason);
      } finally {
        setBusy(state, panel, hooks, false);
      }
    },
  };

  input.addEventListener("input", () => {
    sendButton.disabled = state.busy || input.value.trim() === "";
  });
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void panel.send(input.value);
  });
  return panel;
}
