import { ApiError } from "./client.js";
import { AnswerQueue, LabelApi } from "./queue.js";
import { Answer, ModelExport, Phase, QueryView, SessionStatus } from "./types.js";

/** The endpoints the console consumes; ApiClient satisfies it. */
export interface SessionApi extends LabelApi {
  getStatus(sessionId: string): Promise<SessionStatus>;
  getQueries(sessionId: string): Promise<QueryView[]>;
  exportModel(sessionId: string): Promise<ModelExport>;
}

export interface ConsoleState {
  phase: Phase | "loading";
  status: SessionStatus | null;
  queries: QueryView[];
  /** Answers the user gave that the service has not acked yet. */
  inFlight: ReadonlyMap<string, Answer>;
  online: boolean;
  conflict: string | null;
  error: string | null;
}

type Listener = (state: ConsoleState) => void;

/** Client-side session state: polls the service, funnels answers through the
 *  offline queue, and advances optimistically. Everything it exposes is
 *  fetched; the only derived numbers are progress ratios in the view. */
export class SessionStore {
  private state: ConsoleState = {
    phase: "loading",
    status: null,
    queries: [],
    inFlight: new Map(),
    online: true,
    conflict: null,
    error: null,
  };
  private answers = new Map<string, Answer>();
  private queue: AnswerQueue;
  private listeners: Listener[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private client: SessionApi,
    readonly sessionId: string,
    private pollMs = 1000,
  ) {
    this.queue = new AnswerQueue(client, sessionId, {
      acked: (queryId, ack) => {
        this.answers.delete(queryId);
        // the final answer of a batch flips the session into computing;
        // reflect that immediately so controls disable without a poll
        this.patch({ inFlight: new Map(this.answers), phase: ack.phase });
      },
      rejected: (queryId, message) => {
        this.answers.delete(queryId);
        this.patch({ inFlight: new Map(this.answers), conflict: message });
        void this.refresh();
      },
      online: (up) => {
        if (up !== this.state.online) this.patch({ online: up });
      },
    });
  }

  get current(): ConsoleState {
    return this.state;
  }

  get queuedAnswers(): number {
    return this.queue.size;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    fn(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  /** One status+queries round trip. Safe to call at any time. */
  async refresh(): Promise<void> {
    let status: SessionStatus;
    try {
      status = await this.client.getStatus(this.sessionId);
    } catch (err) {
      if (err instanceof ApiError) {
        this.patch({ error: err.message });
      } else {
        this.patch({ online: false });
      }
      return;
    }
    let queries: QueryView[] = [];
    if (status.phase === "awaiting_labels") {
      try {
        queries = await this.client.getQueries(this.sessionId);
      } catch {
        this.patch({ online: false, status, phase: status.phase });
        return;
      }
    }
    // answers the server already has need no local marker
    for (const id of [...this.answers.keys()]) {
      if (!queries.some((q) => q.query_id === id)) this.answers.delete(id);
    }
    this.patch({
      status,
      phase: status.phase,
      queries,
      inFlight: new Map(this.answers),
      online: true,
      error: null,
    });
    if (this.queue.size > 0) await this.flushQueue();
  }

  /** Record a choice. Repeat calls for an answered query are no-ops, so a
   *  double click stays one logical submission. */
  answer(queryId: string, choice: Answer): void {
    if (this.state.phase !== "awaiting_labels") return;
    if (this.answers.has(queryId)) return;
    if (!this.state.queries.some((q) => q.query_id === queryId)) return;
    this.answers.set(queryId, choice);
    this.queue.enqueue(queryId, choice);
    this.patch({ inFlight: new Map(this.answers) });
    void this.flushQueue();
  }

  /** First query still waiting for a choice, if any. */
  nextPending(): QueryView | undefined {
    return this.state.queries.find((q) => !this.answers.has(q.query_id));
  }

  /** Await the outbox; lets tests and scripts drive deterministically. */
  flushNow(): Promise<void> {
    return this.queue.flush();
  }

  exportModel(): Promise<ModelExport> {
    return this.client.exportModel(this.sessionId);
  }

  dismissConflict(): void {
    this.patch({ conflict: null });
  }

  start(): void {
    const tick = async () => {
      await this.refresh();
      if (this.timer !== null) this.timer = setTimeout(tick, this.pollMs);
    };
    this.timer = setTimeout(tick, 0);
  }

  stop(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  private async flushQueue(): Promise<void> {
    await this.queue.flush();
  }

  private patch(partial: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...partial };
    for (const fn of this.listeners) fn(this.state);
  }
}
