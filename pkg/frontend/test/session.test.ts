import { describe, expect, it } from "vitest";

import { ApiClient, SuggestResponse } from "../src/api.js";
import { ConsoleSession } from "../src/session.js";
import { FALLBACK_CARD, GROUNDED_CARD, fakeService, jsonResponse } from "./fixtures.js";

const BASE = "http://svc.test";
const IN_DOMAIN = "Can I return an item I bought three weeks ago?";
const OUT_DOMAIN = "What's a good movie tonight?";

function sessionOver(service = fakeService()) {
  return { service, session: new ConsoleSession(new ApiClient(BASE, service.fetch)) };
}

describe("submitCustomerMessage", () => {
  it("renders a grounded suggestion card for an in-domain message", async () => {
    const { session } = sessionOver();

    const outcome = await session.submitCustomerMessage(IN_DOMAIN);

    expect(outcome).toBe("rendered");
    expect(session.conversation).toHaveLength(1);
    expect(session.conversation[0]).toMatchObject({ role: "Customer", text: IN_DOMAIN });
    expect(session.pending.length).toBeGreaterThanOrEqual(1);
    const card = session.pending[0];
    expect(card.card.text).toBe(GROUNDED_CARD.text); // byte-equal, never rephrased
    expect(card.card.retrieval_fired).toBe(true);
    expect(card.card.grounding_doc_ids).toEqual(["kb-returns"]);
    expect(card.card.scores[0]).toBeGreaterThanOrEqual(0.7);
    expect(card.card.grounding_articles[0].title).toBe("Return policy");
    expect(card.requestId).toBe(session.lastRequestId);
    expect(session.connectionState).toBe("Connected");
  });

  it("renders the fallback card with no grounding out of domain", async () => {
    const { session } = sessionOver();
    await session.submitCustomerMessage(OUT_DOMAIN);
    const card = session.pending[0].card;
    expect(card.is_fallback).toBe(true);
    expect(card.retrieval_fired).toBe(false);
    expect(card.grounding_articles).toEqual([]);
  });

  it("rejects an empty message before touching the conversation", async () => {
    const { session, service } = sessionOver();
    await expect(session.submitCustomerMessage("   ")).rejects.toThrow(/non-empty/);
    expect(session.conversation).toHaveLength(0);
    expect(service.suggestCalls).toBe(0);
  });

  it("goes Degraded on a 502 and preserves the conversation", async () => {
    const api = new ApiClient(BASE, async () =>
      jsonResponse(502, { code: "provider_failure", message: "provider exploded" }),
    );
    const session = new ConsoleSession(api);
    const outcome = await session.submitCustomerMessage(IN_DOMAIN);
    expect(outcome).toBe("failed");
    expect(session.connectionState).toBe("Degraded");
    expect(session.conversation).toHaveLength(1); // prior turns survive
    expect(session.pending).toEqual([]);
    expect(session.retryAvailable).toBe(true);
  });

  it("goes Offline when the service is unreachable, then recovers on retry", async () => {
    const service = fakeService();
    let reachable = false;
    const api = new ApiClient(BASE, (url, init) => {
      if (!reachable) return Promise.reject(new TypeError("fetch failed"));
      return service.fetch(url, init);
    });
    const session = new ConsoleSession(api);

    expect(await session.submitCustomerMessage(IN_DOMAIN)).toBe("failed");
    expect(session.connectionState).toBe("Offline");
    expect(session.retryAvailable).toBe(true);

    reachable = true;
    expect(await session.refreshSuggestions()).toBe("rendered");
    expect(session.connectionState).toBe("Connected");
    expect(session.pending).toHaveLength(1);
    expect(session.retryAvailable).toBe(false);
  });

  it("drops a stale response that was superseded by a newer submission", async () => {
    const waiters: ((response: SuggestResponse) => void)[] = [];
    const api = {
      suggest: () =>
        new Promise<SuggestResponse>((resolve) => waiters.push(resolve)),
      feedback: async () => {},
    } as unknown as ApiClient;
    const session = new ConsoleSession(api);

    const first = session.submitCustomerMessage("How does shipping work?");
    const second = session.submitCustomerMessage(IN_DOMAIN);
    expect(waiters).toHaveLength(2);

    // Newest submission answers first; the older reply lands afterwards.
    waiters[1]({ request_id: "req-2", suggestions: [GROUNDED_CARD] });
    expect(await second).toBe("rendered");
    waiters[0]({ request_id: "req-1", suggestions: [FALLBACK_CARD] });
    expect(await first).toBe("superseded");

    expect(session.lastRequestId).toBe("req-2");
    expect(session.pending).toHaveLength(1);
    expect(session.pending[0].requestId).toBe("req-2");
  });
});

describe("accept and edit feedback loop", () => {
  it("accept appends the card text verbatim and posts exactly one event", async () => {
    const { session, service } = sessionOver();
    await session.submitCustomerMessage(IN_DOMAIN);
    const card = session.pending[0];

    expect(await session.acceptSuggestion(card)).toBe(true);

    expect(session.conversation.at(-1)).toMatchObject({
      role: "Agent",
      text: GROUNDED_CARD.text,
    });
    expect(session.pending).toEqual([]);
    expect(service.feedbackEvents).toEqual([
      { request_id: card.requestId, action: "accepted" },
    ]);
  });

  it("double-accept posts exactly one feedback event", async () => {
    const { session, service } = sessionOver();
    await session.submitCustomerMessage(IN_DOMAIN);
    const card = session.pending[0];

    const [first, second] = await Promise.all([
      session.acceptSuggestion(card),
      session.acceptSuggestion(card), // double-click before the first settles
    ]);

    expect([first, second].filter(Boolean)).toHaveLength(1);
    expect(service.feedbackEvents).toHaveLength(1);
    expect(session.conversation.filter((u) => u.role === "Agent")).toHaveLength(1);

    expect(await session.acceptSuggestion(card)).toBe(false); // and again, later
    expect(service.feedbackEvents).toHaveLength(1);
  });

  it("edit-and-send posts an Edited event carrying the final text", async () => {
    const { session, service } = sessionOver();
    await session.submitCustomerMessage(IN_DOMAIN);
    const card = session.pending[0];
    const finalText = "You have 90 days to return it — just bring your receipt.";

    await session.editAndSend(card, finalText);

    expect(session.conversation.at(-1)).toMatchObject({ role: "Agent", text: finalText });
    expect(service.feedbackEvents).toEqual([
      { request_id: card.requestId, action: "edited", edited_text: finalText },
    ]);
  });

  it("surfaces a feedback 404 as a notice without blocking the reply", async () => {
    const service = fakeService();
    const api = new ApiClient(BASE, (url, init) => {
      if (url.endsWith("/v1/feedback")) {
        return Promise.resolve(
          jsonResponse(404, { code: "unknown_request_id", message: "never served" }),
        );
      }
      return service.fetch(url, init);
    });
    const session = new ConsoleSession(api);
    await session.submitCustomerMessage(IN_DOMAIN);

    expect(await session.acceptSuggestion(session.pending[0])).toBe(true);

    expect(session.conversation.at(-1)?.role).toBe("Agent"); // reply still sent
    expect(session.notices.some((n) => n.includes("never served"))).toBe(true);
  });

  it("ignores cards from a conversation state that has moved on", async () => {
    const { session, service } = sessionOver();
    await session.submitCustomerMessage(IN_DOMAIN);
    const card = session.pending[0];
    await session.submitCustomerMessage("And what about shipping?");

    expect(await session.acceptSuggestion(card)).toBe(false); // card left pending set
    expect(service.feedbackEvents).toHaveLength(0);
  });
});
