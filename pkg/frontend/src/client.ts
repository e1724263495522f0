import {
  Answer,
  ModelExport,
  QueryView,
  SessionRow,
  SessionStatus,
  SubmitAck,
} from "./types.js";
import { z } from "zod";

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

/** Thrown for HTTP error statuses so callers can branch on the code. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parse<T>(schema: z.ZodType<T>, res: Response): Promise<T> {
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    const detail =
      typeof body === "object" && body !== null && "detail" in body
        ? JSON.stringify((body as { detail: unknown }).detail)
        : res.statusText;
    throw new ApiError(res.status, detail);
  }
  return schema.parse(body);
}

/** Thin typed wrapper over the session service; holds no state. */
export class ApiClient {
  constructor(
    private base: string,
    private fetchFn: FetchFn = (...args) => fetch(...args),
  ) {
    this.base = base.replace(/\/$/, "");
  }

  listSessions(): Promise<SessionRow[]> {
    return this.request(z.array(SessionRow), "GET", "/sessions");
  }

  getStatus(sessionId: string): Promise<SessionStatus> {
    return this.request(SessionStatus, "GET", `/sessions/${sessionId}`);
  }

  getQueries(sessionId: string): Promise<QueryView[]> {
    return this.request(z.array(QueryView), "GET", `/sessions/${sessionId}/queries`);
  }

  submitLabel(sessionId: string, queryId: string, answer: Answer): Promise<SubmitAck> {
    return this.request(SubmitAck, "POST", `/sessions/${sessionId}/labels`, {
      query_id: queryId,
      answer,
    });
  }

  exportModel(sessionId: string): Promise<ModelExport> {
    return this.request(ModelExport, "GET", `/sessions/${sessionId}/model`);
  }

  private async request<T>(
    schema: z.ZodType<T>,
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const res = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    return parse(schema, res);
  }
}
