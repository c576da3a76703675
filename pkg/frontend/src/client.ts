/**
 * HTTP client for the session service.
 *
 * The console talks to the service and nothing else; every linguistic
 * decision happens server side.  The client distinguishes three failure
 * shapes so the controller can react differently to each:
 *
 * - ServiceFailure: the service answered with a structured error body.
 * - TransportFailure: the request never completed (retryable).
 * - PayloadMismatch: the service answered 2xx but the body does not match
 *   the documented schema (rendering it would be a partial render).
 */
import type { ZodType } from "zod";
import {
  CommandResponseSchema,
  ErrorBodySchema,
  SceneSchema,
  SessionResponseSchema,
  readErrorDetail,
  type CommandResponse,
  type ErrorDetail,
  type Scene,
  type SessionResponse,
} from "./types";

export class ServiceFailure extends Error {
  readonly status: number;
  readonly code: string;
  readonly category: string;
  readonly detail: ErrorDetail;

  constructor(status: number, code: string, message: string, category: string,
              detail: ErrorDetail) {
    super(message);
    this.name = "ServiceFailure";
    this.status = status;
    this.code = code;
    this.category = category;
    this.detail = detail;
  }
}

export class TransportFailure extends Error {
  constructor(message: string, options?: { cause?: unknown }) {
    super(message, options);
    this.name = "TransportFailure";
  }
}

export class PayloadMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadMismatch";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** The five calls the console makes; `ApiClient` is the HTTP implementation. */
export interface SessionApi {
  createSession(scene?: Scene): Promise<SessionResponse>;
  getScene(sessionId: string): Promise<Scene>;
  sendCommand(sessionId: string, text: string): Promise<CommandResponse>;
  undo(sessionId: string): Promise<Scene>;
  reset(sessionId: string): Promise<Scene>;
}

export class ApiClient implements SessionApi {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    // Bind the global fetch lazily so tests can stub it per instance.
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  createSession(scene?: Scene): Promise<SessionResponse> {
    const body = scene === undefined ? {} : { scene };
    return this.request("POST", "/api/session", body, SessionResponseSchema);
  }

  getScene(sessionId: string): Promise<Scene> {
    return this.request("GET", `/api/session/${sessionId}/scene`, undefined, SceneSchema);
  }

  sendCommand(sessionId: string, text: string): Promise<CommandResponse> {
    return this.request("POST", `/api/session/${sessionId}/command`, { text },
                        CommandResponseSchema);
  }

  undo(sessionId: string): Promise<Scene> {
    return this.request("POST", `/api/session/${sessionId}/undo`, undefined, SceneSchema);
  }

  reset(sessionId: string): Promise<Scene> {
    return this.request("POST", `/api/session/${sessionId}/reset`, undefined, SceneSchema);
  }

  private async request<T>(method: string, path: string, body: unknown,
                           schema: ZodType<T>): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);

    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (cause) {
      throw new TransportFailure(`request to ${path} failed: ${String(cause)}`, { cause });
    }

    let data: unknown;
    try {
      data = await response.json();
    } catch {
      if (response.ok) throw new PayloadMismatch(`${path}: response body is not JSON`);
      throw new ServiceFailure(response.status, "error",
                               `${path}: HTTP ${response.status}`, "transport",
                               readErrorDetail(undefined));
    }

    if (!response.ok) {
      const parsed = ErrorBodySchema.safeParse(data);
      if (parsed.success) {
        const { code, message, category, detail } = parsed.data;
        throw new ServiceFailure(response.status, code, message, category,
                                 readErrorDetail(detail));
      }
      throw new ServiceFailure(response.status, "error",
                               `${path}: HTTP ${response.status}`, "transport",
                               readErrorDetail(undefined));
    }

    const parsed = schema.safeParse(data);
    if (!parsed.success) {
      const issue = parsed.error.issues[0];
      const where = issue ? `${issue.path.join(".")}: ${issue.message}` : "unknown issue";
      throw new PayloadMismatch(`${path}: unexpected payload (${where})`);
    }
    return parsed.data;
  }
}
