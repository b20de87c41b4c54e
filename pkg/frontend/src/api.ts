/**
 * Typed client for the suggestion service's JSON endpoints.
 * The console talks to /v1/suggest, /v1/health, /v1/feedback and nothing else.
 */

export type Role = "Customer" | "Agent";

export type Utterance = {
  role: Role;
  text: string;
  timestamp?: number;
};

export type GroundingArticle = {
  id: string;
  title: string;
  body: string;
};

export type SuggestionCard = {
  text: string;
  grounding_doc_ids: string[];
  scores: number[];
  retrieval_fired: boolean;
  pipeline: string;
  latency_ms: number;
  word_count: number;
  within_limit: boolean;
  is_fallback: boolean;
  llm_calls: number;
  grounding_articles: GroundingArticle[];
  debug: { overlap_tokens: string[] };
};

export type SuggestResponse = {
  request_id: string;
  suggestions: SuggestionCard[];
};

export type HealthResponse = {
  status: "ok" | "degraded";
  corpus_size: number;
  index_backend: string | null;
  uptime_s: number;
};

export type FeedbackAction = "accepted" | "edited" | "rejected";

export type FeedbackEvent = {
  request_id: string;
  action: FeedbackAction;
  edited_text?: string;
};

/** Service replied with an error body ({code, message}). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The service never answered: DNS, refused connection, timeout. */
export class ConnectionError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConnectionError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(response: Response): Promise<ApiError> {
  let code = "unknown_error";
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status-line message
  }
  return new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async post(path: string, body: unknown): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (err) {
      throw new ConnectionError(`cannot reach ${this.baseUrl}: ${String(err)}`);
    }
    if (!response.ok) throw await errorFrom(response);
    return response;
  }

  async suggest(
    conversation: Utterance[],
    options: { k?: number; pipeline?: string } = {},
  ): Promise<SuggestResponse> {
    const body: Record<string, unknown> = { conversation };
    if (options.k !== undefined) body.k = options.k;
    if (options.pipeline !== undefined) body.pipeline = options.pipeline;
    const response = await this.post("/v1/suggest", body);
    return (await response.json()) as SuggestResponse;
  }

  async health(): Promise<HealthResponse> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + "/v1/health");
    } catch (err) {
      throw new ConnectionError(`cannot reach ${this.baseUrl}: ${String(err)}`);
    }
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as HealthResponse;
  }

  /** Resolves on 204; a 404 for an unknown request_id throws ApiError. */
  async feedback(event: FeedbackEvent): Promise<void> {
    await this.post("/v1/feedback", event);
  }
}
