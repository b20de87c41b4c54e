/**
 * Console session state: the conversation mirror, pending suggestion cards,
 * and the accept / edit-then-send feedback loop.
 *
 * Invariants the tests pin down:
 *  - every rendered card belongs to exactly one served request_id;
 *  - card text is byte-equal to the service payload, never rephrased;
 *  - resolving a card (accept or edit) posts exactly one feedback event,
 *    no matter how many times the button fires;
 *  - at most one suggest call is live per conversation — a reply that was
 *    superseded by a newer submission is dropped on arrival.
 */

import {
  ApiClient,
  ApiError,
  ConnectionError,
  SuggestionCard,
  Utterance,
} from "./api.js";

export type ConnectionState = "Connected" | "Degraded" | "Offline";

export type PendingCard = {
  requestId: string;
  card: SuggestionCard;
  resolved: boolean;
};

export type SubmitOutcome = "rendered" | "superseded" | "failed";

export class ConsoleSession {
  readonly conversation: Utterance[] = [];
  pending: PendingCard[] = [];
  lastRequestId: string | null = null;
  connectionState: ConnectionState = "Connected";
  /** Non-blocking problems (e.g. feedback 404) surfaced to the banner. */
  readonly notices: string[] = [];
  /** Set when the last suggest call failed; the UI offers a retry button. */
  retryAvailable = false;

  private submitSeq = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly options: { k?: number; pipeline?: string } = {},
  ) {}

  /** Append a customer utterance and fetch fresh suggestions for it. */
  async submitCustomerMessage(text: string): Promise<SubmitOutcome> {
    if (!text.trim()) throw new Error("customer message must be non-empty");
    this.conversation.push({ role: "Customer", text, timestamp: Date.now() / 1000 });
    return this.refreshSuggestions();
  }

  /** Re-run suggest for the current conversation (the retry affordance). */
  async refreshSuggestions(): Promise<SubmitOutcome> {
    const seq = ++this.submitSeq;
    let response;
    try {
      response = await this.api.suggest([...this.conversation], this.options);
    } catch (err) {
      if (seq !== this.submitSeq) return "superseded";
      this.pending = [];
      this.retryAvailable = true;
      if (err instanceof ConnectionError) {
        this.connectionState = "Offline";
      } else if (err instanceof ApiError && err.status >= 500) {
        this.connectionState = "Degraded";
      } else {
        this.notices.push(err instanceof Error ? err.message : String(err));
      }
      return "failed";
    }
    if (seq !== this.submitSeq) return "superseded"; // a newer submit won
    this.connectionState = "Connected";
    this.retryAvailable = false;
    this.lastRequestId = response.request_id;
    this.pending = response.suggestions.map((card) => ({
      requestId: response.request_id,
      card,
      resolved: false,
    }));
    return "rendered";
  }

  /** Send the card text verbatim; posts exactly one Accepted event. */
  async acceptSuggestion(card: PendingCard): Promise<boolean> {
    return this.resolve(card, card.card.text, "accepted");
  }

  /** Send agent-edited text; posts exactly one Edited event carrying it. */
  async editAndSend(card: PendingCard, finalText: string): Promise<boolean> {
    if (!finalText.trim()) throw new Error("edited reply must be non-empty");
    return this.resolve(card, finalText, "edited");
  }

  private async resolve(
    card: PendingCard,
    finalText: string,
    action: "accepted" | "edited",
  ): Promise<boolean> {
    if (!this.pending.includes(card) || card.resolved) return false;
    // Mark resolved before any await: a double-click on the button cannot
    // race past this line, so at most one feedback event leaves the console.
    card.resolved = true;
    this.conversation.push({
      role: "Agent",
      text: finalText,
      timestamp: Date.now() / 1000,
    });
    this.pending = [];
    try {
      await this.api.feedback({
        request_id: card.requestId,
        action,
        ...(action === "edited" ? { edited_text: finalText } : {}),
      });
    } catch (err) {
      // Feedback is best-effort telemetry; never block the sent reply.
      this.notices.push(
        err instanceof Error ? `feedback not recorded: ${err.message}` : String(err),
      );
    }
    return true;
  }
}
