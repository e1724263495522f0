import { describe, expect, it, vi } from "vitest";

import { ApiError } from "../src/client.js";
import { SessionApi, SessionStore } from "../src/store.js";
import { QueryView, SessionStatus, SubmitAck } from "../src/types.js";

function query(id: string): QueryView {
  return {
    query_id: id,
    iteration: 1,
    issued_at: null,
    left: { id: 1, values: { alpha: 1.5, mode: "sync" } },
    right: { id: 2, values: { alpha: 2.5, mode: "sync" } },
    differing: ["alpha"],
  };
}

function status(overrides: Partial<SessionStatus> = {}): SessionStatus {
  return {
    session_id: "s1",
    phase: "awaiting_labels",
    created_at: null,
    variant: "cm_casl",
    Q: 20,
    q: 5,
    labels_used: 0,
    iteration: 1,
    pending: 5,
    error: null,
    ca_history: [{ iteration: 0, ca: 60 }],
    ssl_steps: [],
    last_batch: [],
    ...overrides,
  };
}

function ack(queryId: string, overrides: Partial<SubmitAck> = {}): SubmitAck {
  return {
    session_id: "s1",
    query_id: queryId,
    status: "recorded",
    answered: 1,
    expected: 5,
    phase: "awaiting_labels",
    ...overrides,
  };
}

function makeStore(api: Partial<SessionApi>) {
  const client: SessionApi = {
    getStatus: vi.fn().mockResolvedValue(status()),
    getQueries: vi.fn().mockResolvedValue([query("q1"), query("q2")]),
    submitLabel: vi.fn().mockImplementation(async (_s: string, id: string) => ack(id)),
    exportModel: vi.fn(),
    ...api,
  };
  return { store: new SessionStore(client, "s1"), client };
}

describe("refresh", () => {
  it("loads status and pending queries", async () => {
    const { store } = makeStore({});
    await store.refresh();
    expect(store.current.phase).toBe("awaiting_labels");
    expect(store.current.queries.map((q) => q.query_id)).toEqual(["q1", "q2"]);
    expect(store.current.online).toBe(true);
  });

  it("skips the query fetch outside awaiting_labels", async () => {
    const getQueries = vi.fn();
    const { store } = makeStore({
      getStatus: vi.fn().mockResolvedValue(status({ phase: "computing" })),
      getQueries,
    });
    await store.refresh();
    expect(getQueries).not.toHaveBeenCalled();
    expect(store.current.queries).toEqual([]);
  });

  it("flags offline on network failure without clearing state", async () => {
    const { store, client } = makeStore({});
    await store.refresh();
    (client.getStatus as ReturnType<typeof vi.fn>).mockRejectedValue(
      new TypeError("fetch failed"),
    );
    await store.refresh();
    expect(store.current.online).toBe(false);
    expect(store.current.queries).toHaveLength(2); // stale but shown
  });
});

describe("answer", () => {
  it("advances optimistically and clears on ack", async () => {
    const { store } = makeStore({});
    await store.refresh();
    store.answer("q1", "left_better");
    expect(store.current.inFlight.get("q1")).toBe("left_better");
    await store.flushNow();
    expect(store.current.inFlight.size).toBe(0);
  });

  it("is a single logical submission under a double click", async () => {
    const submitLabel = vi
      .fn()
      .mockImplementation(async (_s: string, id: string) => ack(id));
    const { store } = makeStore({ submitLabel });
    await store.refresh();
    store.answer("q1", "left_better");
    store.answer("q1", "left_better");
    store.answer("q1", "right_better"); // change attempts are ignored too
    await store.flushNow();
    expect(submitLabel).toHaveBeenCalledTimes(1);
    expect(submitLabel).toHaveBeenCalledWith("s1", "q1", "left_better");
  });

  it("ignores queries that are not pending", async () => {
    const { store, client } = makeStore({});
    await store.refresh();
    store.answer("q99", "left_better");
    await store.flushNow();
    expect(client.submitLabel).not.toHaveBeenCalled();
  });

  it("disables input outside awaiting_labels", async () => {
    const { store, client } = makeStore({
      getStatus: vi.fn().mockResolvedValue(status({ phase: "computing" })),
    });
    await store.refresh();
    store.answer("q1", "left_better");
    expect(client.submitLabel).not.toHaveBeenCalled();
  });

  it("flips to computing the moment the final ack says so", async () => {
    const { store } = makeStore({
      submitLabel: vi
        .fn()
        .mockImplementation(async (_s: string, id: string) =>
          ack(id, { phase: "computing", answered: 5, expected: 5 }),
        ),
    });
    await store.refresh();
    store.answer("q1", "left_better");
    await store.flushNow();
    expect(store.current.phase).toBe("computing");
  });

  it("queues through an outage, then resends without loss", async () => {
    let down = true;
    const sent: string[] = [];
    const { store } = makeStore({
      submitLabel: vi.fn().mockImplementation(async (_s: string, id: string) => {
        if (down) throw new TypeError("fetch failed");
        sent.push(id);
        return ack(id);
      }),
    });
    await store.refresh();
    store.answer("q1", "left_better");
    store.answer("q2", "right_better");
    await store.flushNow();
    expect(store.current.online).toBe(false);
    expect(store.queuedAnswers).toBe(2);

    down = false;
    await store.refresh(); // reconnect path drains the queue
    expect(sent).toEqual(["q1", "q2"]);
    expect(store.current.online).toBe(true);
    expect(store.queuedAnswers).toBe(0);
  });

  it("surfaces conflicts and refetches", async () => {
    const getStatus = vi.fn().mockResolvedValue(status());
    const { store } = makeStore({
      getStatus,
      submitLabel: vi.fn().mockRejectedValue(new ApiError(409, "already answered")),
    });
    await store.refresh();
    const callsBefore = getStatus.mock.calls.length;
    store.answer("q1", "left_better");
    await store.flushNow();
    await Promise.resolve();
    expect(store.current.conflict).toContain("already answered");
    expect(getStatus.mock.calls.length).toBeGreaterThan(callsBefore);
    store.dismissConflict();
    expect(store.current.conflict).toBeNull();
  });
});

describe("nextPending", () => {
  it("skips locally answered queries", async () => {
    const { store } = makeStore({
      submitLabel: vi.fn().mockReturnValue(new Promise(() => {})), // never acks
    });
    await store.refresh();
    expect(store.nextPending()?.query_id).toBe("q1");
    store.answer("q1", "left_better");
    expect(store.nextPending()?.query_id).toBe("q2");
  });
});
