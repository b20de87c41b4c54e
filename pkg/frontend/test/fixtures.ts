/**
 * Service-shaped fixtures. The two suggestion payloads were captured
 * verbatim from the Python service running against its demo corpus and a
 * mock LLM gateway, so the console is tested against the real wire shape.
 */

import { FeedbackEvent, SuggestionCard } from "../src/api.js";

export const GROUNDED_CARD: SuggestionCard = {
  text: "You can return it within 90 days with your receipt.",
  grounding_doc_ids: ["kb-returns"],
  scores: [0.7492686492653553],
  retrieval_fired: true,
  pipeline: "baseline",
  latency_ms: 50.39388900040649,
  word_count: 10,
  within_limit: true,
  is_fallback: false,
  llm_calls: 1,
  grounding_articles: [
    {
      id: "kb-returns",
      title: "Return policy",
      body:
        "Items can be returned within 90 days of purchase with a receipt " +
        "for a full refund. Opened software and clearance items are final " +
        "sale and cannot be returned.",
    },
  ],
  debug: { overlap_tokens: ["90", "days", "receipt", "within"] },
};

export const FALLBACK_CARD: SuggestionCard = {
  text:
    "I can help with questions about our products, orders, and policies — " +
    "could you share more detail about your request?",
  grounding_doc_ids: [],
  scores: [],
  retrieval_fired: false,
  pipeline: "baseline",
  latency_ms: 0.12984299974050373,
  word_count: 20,
  within_limit: true,
  is_fallback: true,
  llm_calls: 0,
  grounding_articles: [],
  debug: { overlap_tokens: [] },
};

const IN_DOMAIN_HINTS = ["return", "shipping", "password", "warranty", "receipt"];

export type FakeService = {
  fetch: (url: string, init?: RequestInit) => Promise<Response>;
  feedbackEvents: FeedbackEvent[];
  suggestCalls: number;
  servedIds: string[];
};

/**
 * A fetch implementation that behaves like the suggestion service: routes
 * by keyword to the grounded or fallback card, serves monotone request ids,
 * accepts feedback only for ids it actually served (404 otherwise).
 */
export function fakeService(): FakeService {
  const state: FakeService = {
    feedbackEvents: [],
    suggestCalls: 0,
    servedIds: [],
    fetch: async (url, init) => {
      if (url.endsWith("/v1/health")) {
        return jsonResponse(200, {
          status: "ok",
          corpus_size: 8,
          index_backend: "exact",
          uptime_s: 1.5,
        });
      }
      const body = JSON.parse(String(init?.body ?? "{}"));
      if (url.endsWith("/v1/suggest")) {
        state.suggestCalls += 1;
        const turns: { role: string; text: string }[] = body.conversation ?? [];
        const last = turns.filter((t) => t.role === "Customer").at(-1);
        if (!last) {
          return jsonResponse(400, {
            code: "malformed_conversation",
            message: "final turn must be a customer utterance",
          });
        }
        const requestId = `demo-${String(state.suggestCalls).padStart(6, "0")}`;
        state.servedIds.push(requestId);
        const grounded = IN_DOMAIN_HINTS.some((hint) =>
          last.text.toLowerCase().includes(hint),
        );
        return jsonResponse(200, {
          request_id: requestId,
          suggestions: [grounded ? GROUNDED_CARD : FALLBACK_CARD],
        });
      }
      if (url.endsWith("/v1/feedback")) {
        const event = body as FeedbackEvent;
        if (!state.servedIds.includes(event.request_id)) {
          return jsonResponse(404, {
            code: "unknown_request_id",
            message: `request ${event.request_id} was never served`,
          });
        }
        state.feedbackEvents.push(event);
        return new Response(null, { status: 204 });
      }
      return jsonResponse(404, { code: "not_found", message: url });
    },
  };
  return state;
}

export function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}
