/**
 * Pure HTML renderers for the console. No DOM access here — main.ts owns
 * the document; these return strings so the views are trivially testable.
 */

import { SuggestionCard, Utterance } from "./api.js";
import { ConnectionState, PendingCard } from "./session.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function escapeRegExp(text: string): string {
  return text.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

/**
 * Wrap every whole-word occurrence of the overlap tokens in <mark>.
 * The body is escaped first; tokens come from the service's debug field
 * and are plain lowercase content words.
 */
export function highlightOverlap(body: string, overlapTokens: string[]): string {
  let html = escapeHtml(body);
  for (const token of overlapTokens) {
    if (!token) continue;
    const pattern = new RegExp(`\\b(${escapeRegExp(escapeHtml(token))})\\b`, "gi");
    html = html.replace(pattern, "<mark>$1</mark>");
  }
  return html;
}

export function renderCard(pending: PendingCard): string {
  const card = pending.card;
  const badge = card.retrieval_fired
    ? `<span class="badge badge-grounded">grounded</span>`
    : `<span class="badge badge-none">no grounding</span>`;
  const fallback = card.is_fallback
    ? `<span class="badge badge-fallback">fallback</span>`
    : "";
  const articles = card.grounding_articles
    .map((article, i) => {
      const score = card.scores[i];
      const scoreLabel = score === undefined ? "" : ` <em>(${score.toFixed(3)})</em>`;
      return [
        `<details class="grounding">`,
        `<summary>${escapeHtml(article.title)}${scoreLabel}</summary>`,
        `<p>${highlightOverlap(article.body, card.debug.overlap_tokens)}</p>`,
        `</details>`,
      ].join("");
    })
    .join("");
  const disabled = pending.resolved ? " disabled" : "";
  return [
    `<div class="card" data-request-id="${escapeHtml(pending.requestId)}">`,
    `<p class="card-text">${escapeHtml(card.text)}</p>`,
    `<p class="card-meta">${badge}${fallback}` +
      `<span class="meta">${card.pipeline} · ${card.llm_calls} call(s) · ` +
      `${card.latency_ms.toFixed(0)} ms · ${card.word_count} words</span></p>`,
    articles,
    `<p class="card-actions">` +
      `<button class="accept"${disabled}>Accept</button>` +
      `<button class="edit"${disabled}>Edit &amp; send</button></p>`,
    `</div>`,
  ].join("\n");
}

export function renderConversation(conversation: Utterance[]): string {
  return conversation
    .map(
      (u) =>
        `<p class="turn turn-${u.role.toLowerCase()}">` +
        `<strong>${u.role}:</strong> ${escapeHtml(u.text)}</p>`,
    )
    .join("\n");
}

export function renderBanner(state: ConnectionState, notices: string[]): string {
  const label =
    state === "Connected"
      ? ""
      : state === "Degraded"
        ? `<div class="banner banner-degraded">Service degraded — suggestions unavailable, you can retry.</div>`
        : `<div class="banner banner-offline">Offline — cannot reach the suggestion service.</div>`;
  const noteHtml = notices
    .map((n) => `<div class="banner banner-notice">${escapeHtml(n)}</div>`)
    .join("");
  return label + noteHtml;
}

export function renderRetry(retryAvailable: boolean): string {
  return retryAvailable
    ? `<p class="retry"><button class="retry-suggest">Retry suggestions</button></p>`
    : "";
}
