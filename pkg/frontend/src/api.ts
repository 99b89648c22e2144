// Typed client for the alignment query service.  The UI performs no
// inference of its own: every decision shown on screen round-trips this API.

export type QueryKindWire = "forbidden" | "goal";
export type VerdictWire = "must_avoid" | "must_visit" | "neither";
export type SessionStatusWire = "awaiting_answers" | "solved" | "no_solution" | "exhausted";

export interface PendingQuery {
  state: string;
  kind: QueryKindWire;
  prompt: string;
}

export interface HistoryEntry {
  state: string;
  kind: QueryKindWire;
  verdict: VerdictWire;
  iteration: number;
}

export interface PolicyView {
  actions: Record<string, string>;
  occupancy: Record<string, number>;
}

export interface SessionResource {
  id: string;
  instance: string;
  status: SessionStatusWire;
  iteration: number;
  pending: PendingQuery[];
  history: HistoryEntry[];
  candidates: { forbidden: string[]; goal: string[] };
  confirmed: { forbidden: string[]; goal: string[] };
  policy: PolicyView | null;
}

export interface InstanceMeta {
  name: string;
  states: number;
  width?: number;
  height?: number;
}

export interface LayoutDoc {
  width: number;
  height: number;
  cells: [number, number, string][];
}

export interface InstanceDoc {
  name: string;
  states: string[];
  layout?: LayoutDoc;
}

export interface Answer {
  state: string;
  kind: QueryKindWire;
  verdict: VerdictWire;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const message = (body as { error?: string }).error ?? response.statusText;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

export class AlignClient {
  constructor(private base: string = "") {}

  listInstances(): Promise<InstanceMeta[]> {
    return request(this.base, "/api/instances");
  }

  getInstance(name: string): Promise<InstanceDoc> {
    return request(this.base, `/api/instances/${encodeURIComponent(name)}`);
  }

  createSession(instance: string): Promise<SessionResource> {
    return request(this.base, "/api/sessions", {
      method: "POST",
      body: JSON.stringify({ instance, planning: "optimal" }),
    });
  }

  getSession(id: string): Promise<SessionResource> {
    return request(this.base, `/api/sessions/${id}`);
  }

  postAnswers(id: string, answers: Answer[]): Promise<SessionResource> {
    return request(this.base, `/api/sessions/${id}/answers`, {
      method: "POST",
      body: JSON.stringify({ answers }),
    });
  }
}
