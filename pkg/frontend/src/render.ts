// DOM rendering: translates view models into elements.  No requests and no
// decisions happen here.

import type { PendingQuery, SessionResource } from "./api.js";
import type { AnswerDraft, GridViewModel, StateRowView } from "./model.js";
import { answerKey, validVerdicts } from "./model.js";

const VERDICT_LABELS: Record<string, string> = {
  must_avoid: "Must avoid",
  must_visit: "Must visit",
  neither: "Neither",
};

export function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderGrid(doc: Document, model: GridViewModel): HTMLElement {
  const grid = el(doc, "div", "grid");
  grid.style.gridTemplateColumns = `repeat(${model.width}, 2.2rem)`;
  for (const cell of model.cells) {
    const classes = ["cell", `kind-${cell.kind}`, ...cell.overlays.map((o) => `overlay-${o}`)];
    const node = el(doc, "div", classes.join(" "));
    node.dataset.row = String(cell.row);
    node.dataset.col = String(cell.col);
    if (cell.state) {
      node.dataset.state = cell.state;
      node.title = cell.state;
    }
    if (cell.heat > 0) {
      node.style.setProperty("--heat", cell.heat.toFixed(3));
    }
    if (cell.arrow) {
      node.appendChild(el(doc, "span", "arrow", cell.arrow));
    }
    grid.appendChild(node);
  }
  return grid;
}

export function renderStateList(doc: Document, rows: StateRowView[]): HTMLElement {
  const list = el(doc, "ul", "state-list");
  for (const row of rows) {
    const item = el(doc, "li", ["state-row", ...row.overlays.map((o) => `overlay-${o}`)].join(" "));
    item.dataset.state = row.state;
    item.appendChild(el(doc, "span", "state-name", row.state));
    if (row.action !== null) {
      item.appendChild(el(doc, "span", "state-action", row.action));
    }
    if (row.occupancy !== null) {
      item.appendChild(el(doc, "span", "state-occupancy", row.occupancy.toFixed(4)));
    }
    list.appendChild(item);
  }
  return list;
}

export interface PromptCallbacks {
  onVerdict: (query: PendingQuery, verdict: "must_avoid" | "must_visit" | "neither") => void;
  onSubmit: () => void;
}

export function renderPrompts(
  doc: Document,
  session: SessionResource,
  draft: AnswerDraft,
  callbacks: PromptCallbacks,
): HTMLElement {
  const panel = el(doc, "div", "prompts");
  for (const query of session.pending) {
    const row = el(doc, "div", "prompt");
    row.dataset.state = query.state;
    row.dataset.kind = query.kind;
    row.appendChild(el(doc, "p", "prompt-text", query.prompt));
    const chosen = draft.get(answerKey(query.state, query.kind));
    const buttons = el(doc, "div", "prompt-buttons");
    for (const verdict of ["must_avoid", "must_visit", "neither"] as const) {
      const button = el(doc, "button", "verdict", VERDICT_LABELS[verdict]);
      button.dataset.verdict = verdict;
      button.disabled = !validVerdicts(query.kind).includes(verdict);
      if (chosen === verdict) button.classList.add("selected");
      button.addEventListener("click", () => callbacks.onVerdict(query, verdict));
      buttons.appendChild(button);
    }
    row.appendChild(buttons);
    panel.appendChild(row);
  }
  if (session.pending.length > 0) {
    const submit = el(doc, "button", "submit", "Send answers");
    submit.id = "submit-answers";
    submit.disabled = !session.pending.every((p) => draft.has(answerKey(p.state, p.kind)));
    submit.addEventListener("click", callbacks.onSubmit);
    panel.appendChild(submit);
  }
  return panel;
}

export function renderBanner(doc: Document, session: SessionResource): HTMLElement {
  const banner = el(doc, "div", `banner banner-${session.status}`);
  const text =
    session.status === "solved"
      ? "Aligned policy found"
      : session.status === "awaiting_answers"
        ? `Round ${session.iteration + 1}: ${session.pending.length} question(s) pending`
        : "No aligned policy exists under the confirmed answers";
  banner.appendChild(el(doc, "strong", "banner-text", text));
  if (session.status === "no_solution" || session.status === "exhausted") {
    const history = el(doc, "ul", "history");
    for (const entry of session.history) {
      history.appendChild(
        el(doc, "li", "history-entry", `${entry.state} (${entry.kind}): ${entry.verdict}`),
      );
    }
    banner.appendChild(history);
  }
  return banner;
}

export function renderToast(doc: Document, message: string): HTMLElement {
  return el(doc, "div", "toast", message);
}
