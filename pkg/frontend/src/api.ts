/**
 * Typed client for the workbench JSON API.
 *
 * Every number and mask shown in the UI comes through this module; nothing
 * is computed client-side. Endpoints mirror the service one-to-one:
 * session creation, pair/proposal uploads, chat, point queries and artifact
 * downloads. Server errors are surfaced as ApiError carrying the server's
 * own message so panels can show it verbatim.
 */

import type { PlacedPoint } from "./state.js";

/** Response to an image pair upload. */
export interface PairSummary {
  width: number;
  height: number;
  ground_truth: boolean;
  prediction: boolean;
}

/** Response to a proposal file upload. */
export interface ProposalSummary {
  count: number;
  width: number;
  height: number;
  embedding_dim: number;
}

/** One chat exchange's result. */
export interface ChatReply {
  reply: string;
  artifacts: string[];
  tools_used: string[];
}

/** Result of a point query. */
export interface PointQueryReply {
  summary: string;
  /** Proposal ids in the clicked semantic category. */
  category: string[];
  /** Subset of the category flagged as changed. */
  changed: string[];
  /** Change angle in degrees for every category member. */
  angles: Record<string, number>;
  /** Artifact name of the rendered change mask. */
  mask: string;
}

export interface Health {
  status: string;
  version: string;
  backend: string;
}

/** Optional extras accompanying a pair upload. */
export interface PairUpload {
  imageA: Blob;
  imageB: Blob;
  groundTruth?: Blob;
  prediction?: Blob;
  humanCaption?: string;
}

/** Non-2xx response, message taken from the server's error body. */
export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
  }
}

async function errorFrom(resp: Response): Promise<ApiError> {
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (typeof body.detail === "string") {
      message = body.detail;
    } else if (body.detail !== undefined) {
      message = JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(resp.status, message);
}

export class ApiClient {
  private base: string;
  private fetchFn: typeof fetch;

  constructor(base = "", fetchFn?: typeof fetch) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as T;
  }

  async newSession(): Promise<string> {
    const body = await this.json<{ session_id: string }>("/api/session", { method: "POST" });
    return body.session_id;
  }

  async uploadPair(sessionId: string, upload: PairUpload): Promise<PairSummary> {
    const form = new FormData();
    form.append("image_a", upload.imageA, "a.png");
    form.append("image_b", upload.imageB, "b.png");
    if (upload.groundTruth) form.append("ground_truth", upload.groundTruth, "gt.png");
    if (upload.prediction) form.append("prediction", upload.prediction, "pred.png");
    if (upload.humanCaption) form.append("human_caption", upload.humanCaption);
    return this.json<PairSummary>(`/api/session/${sessionId}/pair`, {
      method: "POST",
      body: form,
    });
  }

  async uploadProposals(sessionId: string, file: Blob): Promise<ProposalSummary> {
    const form = new FormData();
    form.append("file", file, "proposals.json");
    return this.json<ProposalSummary>(`/api/session/${sessionId}/proposals`, {
      method: "POST",
      body: form,
    });
  }

  async chat(sessionId: string, message: string): Promise<ChatReply> {
    return this.json<ChatReply>(`/api/session/${sessionId}/chat`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ message }),
    });
  }

  /**
   * Run a point query with the given prompts and the current slider values.
   * Points are serialized as [row, col, time] triples; all four thresholds
   * travel with the request and the server applies the ones its query models.
   */
  async pointQuery(
    sessionId: string,
    points: readonly PlacedPoint[],
    sliders: Record<string, number>,
  ): Promise<PointQueryReply> {
    const body = {
      points: points.map((p) => [p.row, p.col, p.time]),
      ...sliders,
    };
    return this.json<PointQueryReply>(`/api/session/${sessionId}/point-query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  /** URL of a stored artifact, for <img> tags and downloads. */
  artifactUrl(sessionId: string, name: string): string {
    return `${this.base}/api/session/${sessionId}/artifact/${name}`;
  }

  async health(): Promise<Health> {
    const resp = await this.fetchFn(this.base + "/healthz");
    if (!resp.ok) throw await errorFrom(resp);
    return (await resp.json()) as Health;
  }
}
