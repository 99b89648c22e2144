// App controller: instance picker -> session -> batched answers -> result.
// State only ever changes on server responses (no optimistic rendering).

import { AlignClient, ApiError } from "./api.js";
import type { Answer, InstanceDoc, PendingQuery, SessionResource } from "./api.js";
import { AnswerDraft, answerKey, buildGridViewModel, buildStateListViewModel } from "./model.js";
import { el, renderBanner, renderGrid, renderPrompts, renderStateList, renderToast } from "./render.js";

export class App {
  private doc: InstanceDoc | null = null;
  private session: SessionResource | null = null;
  private draft: AnswerDraft = new Map();

  constructor(
    private root: HTMLElement,
    private client: AlignClient,
    private document_: Document,
  ) {}

  async start(): Promise<void> {
    const instances = await this.client.listInstances();
    const picker = el(this.document_, "div", "picker");
    picker.appendChild(el(this.document_, "h1", "title", "Expectation alignment"));
    const select = el(this.document_, "select", "instance-select");
    select.id = "instance-select";
    for (const meta of instances) {
      const option = this.document_.createElement("option");
      option.value = meta.name;
      option.textContent = meta.width
        ? `${meta.name} (${meta.width}x${meta.height})`
        : `${meta.name} (${meta.states} states)`;
      select.appendChild(option);
    }
    const button = el(this.document_, "button", "open", "Open");
    button.id = "open-instance";
    button.addEventListener("click", () => {
      void this.openInstance(select.value);
    });
    picker.appendChild(select);
    picker.appendChild(button);
    this.root.replaceChildren(picker);
  }

  async openInstance(name: string): Promise<void> {
    try {
      this.doc = await this.client.getInstance(name);
      this.session = await this.client.createSession(name);
      this.draft = new Map();
      this.render();
    } catch (error) {
      this.toast(error);
    }
  }

  setVerdict(query: PendingQuery, verdict: "must_avoid" | "must_visit" | "neither"): void {
    this.draft.set(answerKey(query.state, query.kind), verdict);
    this.render();
  }

  async submit(): Promise<void> {
    if (!this.session) return;
    const answers: Answer[] = this.session.pending.map((p) => ({
      state: p.state,
      kind: p.kind,
      verdict: this.draft.get(answerKey(p.state, p.kind))!,
    }));
    try {
      this.session = await this.client.postAnswers(this.session.id, answers);
      this.draft = new Map();
      this.render();
    } catch (error) {
      if (error instanceof ApiError && (error.status === 409 || error.status === 422)) {
        // stale view: fetch the authoritative state and re-render
        this.session = await this.client.getSession(this.session.id);
        this.draft = new Map();
        this.render();
      }
      this.toast(error);
    }
  }

  render(): void {
    if (!this.doc || !this.session) return;
    const container = el(this.document_, "div", "session");
    container.appendChild(el(this.document_, "h1", "title", this.session.instance));
    container.appendChild(renderBanner(this.document_, this.session));

    const gridModel = buildGridViewModel(this.doc, this.session);
    if (gridModel) {
      container.appendChild(renderGrid(this.document_, gridModel));
    } else {
      container.appendChild(
        renderStateList(this.document_, buildStateListViewModel(this.doc, this.session)),
      );
    }

    if (this.session.status === "awaiting_answers") {
      container.appendChild(
        renderPrompts(this.document_, this.session, this.draft, {
          onVerdict: (query, verdict) => this.setVerdict(query, verdict),
          onSubmit: () => void this.submit(),
        }),
      );
    }
    this.root.replaceChildren(container);
  }

  private toast(error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    this.root.appendChild(renderToast(this.document_, message));
  }

  current(): SessionResource | null {
    return this.session;
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (root) {
    const app = new App(root, new AlignClient(""), document);
    void app.start();
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
