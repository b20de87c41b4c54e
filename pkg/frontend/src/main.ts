/**
 * Browser entry point: wires the session to the DOM. Everything testable
 * lives in api/session/cards/demo — this file only shuffles HTML strings
 * into elements and events back into session calls.
 */

import { ApiClient } from "./api.js";
import { renderBanner, renderCard, renderConversation, renderRetry } from "./cards.js";
import { ScriptedCustomer, runDemoStep } from "./demo.js";
import { ConsoleSession } from "./session.js";

const SERVICE_URL =
  new URLSearchParams(window.location.search).get("service") ?? "http://127.0.0.1:8080";

const api = new ApiClient(SERVICE_URL);
const session = new ConsoleSession(api);
const customer = new ScriptedCustomer();

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node;
}

function redraw(): void {
  el("banner").innerHTML = renderBanner(session.connectionState, session.notices);
  el("conversation").innerHTML = renderConversation(session.conversation);
  el("cards").innerHTML =
    session.pending.map(renderCard).join("\n") + renderRetry(session.retryAvailable);
  (el("demo-step") as HTMLButtonElement).disabled = customer.remaining === 0;
}

async function submitFromInput(): Promise<void> {
  const input = el("customer-input") as HTMLInputElement;
  const text = input.value.trim();
  if (!text) return;
  input.value = "";
  await session.submitCustomerMessage(text);
  redraw();
}

el("send").addEventListener("click", () => void submitFromInput());
el("customer-input").addEventListener("keydown", (event) => {
  if ((event as KeyboardEvent).key === "Enter") void submitFromInput();
});

el("demo-step").addEventListener("click", () => {
  void runDemoStep(session, customer).then(redraw);
});

el("cards").addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const pending = session.pending.find((p) => !p.resolved);
  if (!pending) {
    if (target.classList.contains("retry-suggest")) {
      void session.refreshSuggestions().then(redraw);
    }
    return;
  }
  if (target.classList.contains("accept")) {
    void session.acceptSuggestion(pending).then(redraw);
  } else if (target.classList.contains("edit")) {
    const finalText = window.prompt("Edit the reply before sending:", pending.card.text);
    if (finalText && finalText.trim()) {
      void session.editAndSend(pending, finalText).then(redraw);
    }
  }
});

void api
  .health()
  .then((health) => {
    el("health").textContent =
      `service ${health.status} · ${health.corpus_size} articles · ` +
      `${health.index_backend ?? "no"} index`;
  })
  .catch(() => {
    session.connectionState = "Offline";
    redraw();
  });

redraw();
