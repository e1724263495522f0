import { ApiClient } from "./client.js";
import { SessionStore } from "./store.js";
import { bindKeyboard, render } from "./view.js";

function params(): { base: string; session: string | null } {
  const q = new URLSearchParams(window.location.search);
  return {
    base: q.get("base") ?? window.location.origin,
    session: q.get("session"),
  };
}

async function pickSession(client: ApiClient): Promise<string | null> {
  const rows = await client.listSessions();
  const open = rows.find((r) => r.phase !== "done") ?? rows[rows.length - 1];
  return open?.session_id ?? null;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const { base, session } = params();
  const client = new ApiClient(base);
  const sessionId = session ?? (await pickSession(client));
  if (sessionId === null) {
    root.textContent = "no sessions on this service; create one via POST /sessions";
    return;
  }
  const store = new SessionStore(client, sessionId);
  const handlers = {
    answer: (queryId: string, choice: Parameters<SessionStore["answer"]>[1]) =>
      store.answer(queryId, choice),
    refetch: () => {
      store.dismissConflict();
      void store.refresh();
    },
    exportModel: () => store.exportModel(),
  };
  store.subscribe((state) => render(root, state, handlers));
  bindKeyboard(
    document,
    () => store.nextPending()?.query_id,
    handlers.answer,
  );
  store.start();
}

void boot();
