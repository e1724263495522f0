import { ApiError } from "./client.js";
import { Answer, SubmitAck } from "./types.js";

/** The one endpoint the outbox needs; ApiClient satisfies it. */
export interface LabelApi {
  submitLabel(sessionId: string, queryId: string, answer: Answer): Promise<SubmitAck>;
}

export interface QueueEvents {
  /** Answer accepted by the service (recorded or idempotent duplicate). */
  acked: (queryId: string, ack: SubmitAck) => void;
  /** Service refused the answer (conflict, unknown query); state needs a refetch. */
  rejected: (queryId: string, message: string) => void;
  /** Connectivity changed while flushing. */
  online: (up: boolean) => void;
}

interface Pending {
  queryId: string;
  answer: Answer;
}

/** Outbox for label submissions.
 *
 *  One slot per query id, so a double click or an offline retry can never
 *  produce two logical submissions; the service's duplicate ack makes the
 *  resend path safe after a disconnect. Items stay queued across network
 *  failures and flush in FIFO order once connectivity returns.
 */
export class AnswerQueue {
  private items: Pending[] = [];
  private inFlight: Promise<void> | null = null;

  constructor(
    private client: LabelApi,
    private sessionId: string,
    private events: QueueEvents,
  ) {}

  get size(): number {
    return this.items.length;
  }

  get pendingIds(): string[] {
    return this.items.map((p) => p.queryId);
  }

  /** Queue an answer. Re-enqueueing the same (query, answer) is a no-op;
   *  a different answer for a still-queued query replaces it in place. */
  enqueue(queryId: string, answer: Answer): void {
    const existing = this.items.find((p) => p.queryId === queryId);
    if (existing) {
      existing.answer = answer;
      return;
    }
    this.items.push({ queryId, answer });
  }

  /** Send everything queued. Stops at the first network failure, keeping
   *  the unsent tail (and the failed item) for the next attempt. A flush
   *  started while one is running awaits the running one. */
  flush(): Promise<void> {
    if (this.inFlight === null) {
      this.inFlight = this.drain().finally(() => {
        this.inFlight = null;
      });
    }
    return this.inFlight;
  }

  private async drain(): Promise<void> {
    while (this.items.length > 0) {
      const item = this.items[0]!;
      let ack: SubmitAck;
      try {
        ack = await this.client.submitLabel(this.sessionId, item.queryId, item.answer);
      } catch (err) {
        if (err instanceof ApiError) {
          this.items.shift();
          this.events.rejected(item.queryId, err.message);
          continue;
        }
        this.events.online(false);
        return;
      }
      this.items.shift();
      this.events.online(true);
      this.events.acked(item.queryId, ack);
    }
  }
}
