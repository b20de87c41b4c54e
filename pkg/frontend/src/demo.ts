/**
 * Demo mode: a scripted customer so the console is usable without a live
 * chat channel. The script mixes in-domain questions (answerable from the
 * demo knowledge base) with out-of-domain ones that should draw the
 * fallback card.
 */

import { ConsoleSession, SubmitOutcome } from "./session.js";

// The in-domain lines reuse enough article vocabulary to clear the demo
// corpus's 0.7 similarity gate; the others exercise the fallback card.
export const DEMO_SCRIPT: readonly string[] = [
  "Items can be returned within 90 days of purchase with a receipt.",
  "Standard shipping takes five business days and expedited shipping arrives in two business days?",
  "What's a good movie to watch this weekend?",
  "To reset a forgotten password choose Forgot password on the sign-in page and follow the emailed link?",
  "Does the warranty cover accidental damage?",
];

export class ScriptedCustomer {
  private cursor = 0;

  constructor(private readonly script: readonly string[] = DEMO_SCRIPT) {}

  /** Next unplayed line, or null when the script is exhausted. */
  next(): string | null {
    return this.cursor < this.script.length ? this.script[this.cursor++] : null;
  }

  get remaining(): number {
    return this.script.length - this.cursor;
  }

  reset(): void {
    this.cursor = 0;
  }
}

export type DemoStep = {
  message: string;
  outcome: SubmitOutcome;
} | null;

/** Play one scripted customer turn into the session; null when done. */
export async function runDemoStep(
  session: ConsoleSession,
  customer: ScriptedCustomer,
): Promise<DemoStep> {
  const message = customer.next();
  if (message === null) return null;
  const outcome = await session.submitCustomerMessage(message);
  return { message, outcome };
}
