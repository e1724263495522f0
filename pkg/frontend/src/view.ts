import { ConsoleState } from "./store.js";
import { Answer, CaPoint, ModelExport, QueryView } from "./types.js";

export interface Handlers {
  answer: (queryId: string, choice: Answer) => void;
  refetch: () => void;
  exportModel: () => Promise<ModelExport>;
}

const ANSWER_LABELS: Record<Answer, string> = {
  left_better: "Left better",
  right_better: "Right better",
  cannot_tell: "Cannot tell",
};

/** Inline sparkline of held-out CA per retrain; SSL steps as tick marks. */
export function sparklineSvg(history: CaPoint[], sslSteps: number[]): string {
  const w = 240;
  const h = 48;
  if (history.length === 0) {
    return `<svg class="sparkline" width="${w}" height="${h}"></svg>`;
  }
  const iters = history.map((p) => p.iteration);
  const lo = Math.min(...iters);
  const hi = Math.max(...iters);
  const span = Math.max(hi - lo, 1);
  // CA is a percentage; a fixed 0..100 scale keeps runs comparable
  const x = (it: number, idx: number) =>
    history.length === 1 ? w / 2 : ((history[idx]!.iteration - lo) / span) * (w - 8) + 4;
  const y = (ca: number) => h - 4 - (ca / 100) * (h - 8);
  const pts = history
    .map((p, i) => `${x(p.iteration, i).toFixed(1)},${y(p.ca).toFixed(1)}`)
    .join(" ");
  const marks = sslSteps
    .filter((s) => s >= lo && s <= hi)
    .map((s) => {
      const mx = (((s - lo) / span) * (w - 8) + 4).toFixed(1);
      return `<line class="ssl-mark" x1="${mx}" x2="${mx}" y1="2" y2="${h - 2}"/>`;
    })
    .join("");
  return (
    `<svg class="sparkline" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}">` +
    `${marks}<polyline fill="none" points="${pts}"/></svg>`
  );
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function paramTable(doc: Document, query: QueryView): HTMLTableElement {
  const table = el(doc, "table", "params");
  const thead = el(doc, "thead");
  const head = el(doc, "tr");
  for (const caption of ["parameter", "left", "right"]) {
    head.appendChild(el(doc, "th", undefined, caption));
  }
  thead.appendChild(head);
  table.appendChild(thead);
  const body = el(doc, "tbody");
  const differing = new Set(query.differing);
  for (const name of Object.keys(query.left.values)) {
    const row = el(doc, "tr", differing.has(name) ? "differs" : undefined);
    row.appendChild(el(doc, "td", undefined, name));
    // values render verbatim; the service already decoded them
    row.appendChild(el(doc, "td", undefined, String(query.left.values[name])));
    row.appendChild(el(doc, "td", undefined, String(query.right.values[name])));
    body.appendChild(row);
  }
  table.appendChild(body);
  return table;
}

function queryCard(
  doc: Document,
  query: QueryView,
  opts: { answered: Answer | null; active: boolean; disabled: boolean },
  handlers: Handlers,
): HTMLElement {
  const card = el(doc, "section", "query-card");
  card.dataset.queryId = query.query_id;
  if (opts.active) card.classList.add("active");

  const title = el(doc, "h3", undefined, `#${query.query_id}`);
  card.appendChild(title);
  card.appendChild(paramTable(doc, query));

  const row = el(doc, "div", "choices");
  for (const choice of ["left_better", "right_better", "cannot_tell"] as const) {
    const btn = el(doc, "button", `choice ${choice}`, ANSWER_LABELS[choice]);
    btn.dataset.answer = choice;
    btn.disabled = opts.disabled || opts.answered !== null;
    btn.addEventListener("click", () => handlers.answer(query.query_id, choice));
    row.appendChild(btn);
  }
  card.appendChild(row);

  if (opts.answered !== null) {
    card.classList.add("answered");
    card.appendChild(el(doc, "p", "pending-note", `${ANSWER_LABELS[opts.answered]} — sending`));
  }
  return card;
}

function progressLine(doc: Document, state: ConsoleState): HTMLElement {
  const s = state.status;
  const box = el(doc, "div", "progress");
  if (!s || s.q === null || s.Q === null) return box;
  const serverAnswered = s.phase === "awaiting_labels" ? s.q - state.queries.length : 0;
  const answered = Math.min(s.q, serverAnswered + state.inFlight.size);
  box.appendChild(el(doc, "span", "batch-progress", `batch ${answered}/${s.q}`));
  box.appendChild(el(doc, "span", "label-progress", `labels ${s.labels_used}/${s.Q}`));
  return box;
}

function resolutionNotes(doc: Document, state: ConsoleState): HTMLElement | null {
  const batch = state.status?.last_batch ?? [];
  if (batch.length === 0 || state.phase === "done") return null;
  const box = el(doc, "div", "resolutions");
  box.appendChild(el(doc, "h4", undefined, "previous batch"));
  for (const r of batch) {
    const text = r.label === 1 ? "left better" : "right better";
    const note = r.abstained ? ` (resolved by measurement)` : "";
    box.appendChild(el(doc, "p", r.abstained ? "resolved" : undefined,
      `${r.query_id}: ${text}${note}`));
  }
  return box;
}

/** Full re-render of the console into `root`. Idempotent per state. */
export function render(root: HTMLElement, state: ConsoleState, handlers: Handlers): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const header = el(doc, "header");
  header.appendChild(el(doc, "h1", undefined, "pairtune labeling console"));
  const phase = state.phase === "loading" ? "loading" : state.phase;
  const badge = el(doc, "span", `phase phase-${phase}`, phase);
  badge.id = "phase";
  header.appendChild(badge);
  if (state.status) {
    header.appendChild(
      el(doc, "span", "session-id", `${state.status.session_id} · ${state.status.variant ?? ""}`),
    );
  }
  root.appendChild(header);

  if (!state.online) {
    const banner = el(doc, "div", "banner offline",
      `offline — ${state.inFlight.size} answer(s) queued, retrying`);
    banner.id = "offline-banner";
    root.appendChild(banner);
  }
  if (state.conflict) {
    const dialog = el(doc, "div", "banner conflict");
    dialog.id = "conflict-banner";
    dialog.appendChild(el(doc, "span", undefined, `submission rejected: ${state.conflict}`));
    const retry = el(doc, "button", "refetch", "Refetch state");
    retry.addEventListener("click", () => handlers.refetch());
    dialog.appendChild(retry);
    root.appendChild(dialog);
  }
  if (state.error) {
    root.appendChild(el(doc, "div", "banner error", state.error));
  }

  root.appendChild(progressLine(doc, state));

  const dash = el(doc, "div", "dashboard");
  const s = state.status;
  if (s) {
    const spark = el(doc, "div", "ca-panel");
    spark.innerHTML = sparklineSvg(s.ca_history, s.ssl_steps);
    const last = s.ca_history[s.ca_history.length - 1];
    spark.appendChild(
      el(doc, "span", "ca-now",
        last ? `held-out CA ${last.ca.toFixed(1)}%` : "held-out CA –"),
    );
    dash.appendChild(spark);
  }
  const notes = resolutionNotes(doc, state);
  if (notes) dash.appendChild(notes);
  root.appendChild(dash);

  if (state.phase === "awaiting_labels") {
    const list = el(doc, "div", "queries");
    let activeAssigned = false;
    for (const query of state.queries) {
      const answered = state.inFlight.get(query.query_id) ?? null;
      const active = !activeAssigned && answered === null;
      if (active) activeAssigned = true;
      list.appendChild(queryCard(doc, query, { answered, active, disabled: false }, handlers));
    }
    root.appendChild(list);
  } else if (state.phase === "computing" || state.phase === "ssl_step") {
    const list = el(doc, "div", "queries");
    for (const query of state.queries) {
      const answered = state.inFlight.get(query.query_id) ?? null;
      list.appendChild(queryCard(doc, query, { answered, active: false, disabled: true }, handlers));
    }
    root.appendChild(list);
    root.appendChild(el(doc, "p", "computing-note", "retraining — controls disabled"));
  } else if (state.phase === "done" && s) {
    const panel = el(doc, "div", "done-panel");
    panel.appendChild(el(doc, "p", undefined,
      `session complete — CA ${s.ca?.toFixed(2) ?? "n/a"}, RA ${s.ra?.toFixed(3) ?? "n/a"}`));
    const exportBtn = el(doc, "button", "export-model", "Export model");
    exportBtn.disabled = false;
    exportBtn.addEventListener("click", () => {
      void handlers.exportModel().then((m) => {
        const out = doc.getElementById("model-json") ?? el(doc, "pre");
        out.id = "model-json";
        out.textContent = JSON.stringify(m, null, 2);
        panel.appendChild(out);
        try {
          // saving to disk is best-effort; the JSON above is the real output
          const url = doc.defaultView?.URL;
          if (url && typeof url.createObjectURL === "function") {
            const blob = new Blob([JSON.stringify(m)], { type: "application/json" });
            const a = el(doc, "a");
            a.href = url.createObjectURL(blob);
            a.download = `${m.session_id}-model.json`;
            a.click();
          }
        } catch {
          /* headless environments may lack object URLs */
        }
      });
    });
    panel.appendChild(exportBtn);
    root.appendChild(panel);
  } else if (state.phase === "failed") {
    root.appendChild(el(doc, "div", "banner error", state.status?.error ?? "session failed"));
  }
}

/** Keyboard bindings produce the same calls as the buttons on the active card. */
export function bindKeyboard(
  doc: Document,
  activeQueryId: () => string | undefined,
  answer: (queryId: string, choice: Answer) => void,
): () => void {
  const onKey = (ev: KeyboardEvent) => {
    const target = activeQueryId();
    if (target === undefined) return;
    const choice: Answer | null =
      ev.key === "ArrowLeft" ? "left_better"
      : ev.key === "ArrowRight" ? "right_better"
      : ev.key === "s" || ev.key === "S" ? "cannot_tell"
      : null;
    if (choice === null) return;
    ev.preventDefault();
    answer(target, choice);
  };
  doc.addEventListener("keydown", onKey);
  return () => doc.removeEventListener("keydown", onKey);
}
