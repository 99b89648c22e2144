// Pure view-model derivation: the rendered overlays are a function of the
// latest session resource and the static instance document, nothing else.

import type { InstanceDoc, SessionResource } from "./api.js";

export type Overlay =
  | "candidate-forbidden"
  | "candidate-goal"
  | "confirmed-forbidden"
  | "confirmed-goal"
  | "queried-now";

export interface CellView {
  row: number;
  col: number;
  kind: string;
  state: string | null;
  overlays: Overlay[];
  arrow: string | null;
  heat: number;
}

export interface GridViewModel {
  width: number;
  height: number;
  cells: CellView[];
  status: SessionResource["status"];
}

export interface StateRowView {
  state: string;
  overlays: Overlay[];
  action: string | null;
  occupancy: number | null;
}

const ARROWS: Record<string, string> = {
  up: "↑",
  down: "↓",
  left: "←",
  right: "→",
};

function overlaysFor(state: string, session: SessionResource): Overlay[] {
  const overlays: Overlay[] = [];
  if (session.candidates.forbidden.includes(state)) overlays.push("candidate-forbidden");
  if (session.candidates.goal.includes(state)) overlays.push("candidate-goal");
  if (session.confirmed.forbidden.includes(state)) overlays.push("confirmed-forbidden");
  if (session.confirmed.goal.includes(state)) overlays.push("confirmed-goal");
  if (session.pending.some((p) => p.state === state)) overlays.push("queried-now");
  return overlays;
}

function arrowFor(state: string, session: SessionResource): string | null {
  if (!session.policy) return null;
  const action = session.policy.actions[state];
  if (action === undefined) return null;
  return ARROWS[action] ?? action;
}

function heatFor(state: string, session: SessionResource, peak: number): number {
  if (!session.policy || peak <= 0) return 0;
  const mass = session.policy.occupancy[state] ?? 0;
  return Math.min(1, mass / peak);
}

function occupancyPeak(session: SessionResource): number {
  if (!session.policy) return 0;
  return Math.max(0, ...Object.values(session.policy.occupancy));
}

export function buildGridViewModel(
  doc: InstanceDoc,
  session: SessionResource,
): GridViewModel | null {
  if (!doc.layout) return null;
  const { width, height } = doc.layout;
  const kinds = new Map<string, string>();
  for (const [row, col, kind] of doc.layout.cells) {
    kinds.set(`${row},${col}`, kind);
  }
  const stateSet = new Set(doc.states);
  const peak = occupancyPeak(session);
  const cells: CellView[] = [];
  for (let row = 0; row < height; row += 1) {
    for (let col = 0; col < width; col += 1) {
      const key = `${row},${col}`;
      const state = stateSet.has(key) ? key : null;
      cells.push({
        row,
        col,
        kind: kinds.get(key) ?? "floor",
        state,
        overlays: state ? overlaysFor(state, session) : [],
        arrow: state ? arrowFor(state, session) : null,
        heat: state ? heatFor(state, session, peak) : 0,
      });
    }
  }
  return { width, height, cells, status: session.status };
}

export function buildStateListViewModel(
  doc: InstanceDoc,
  session: SessionResource,
): StateRowView[] {
  return doc.states.map((state) => ({
    state,
    overlays: overlaysFor(state, session),
    action: session.policy ? session.policy.actions[state] ?? null : null,
    occupancy: session.policy ? session.policy.occupancy[state] ?? 0 : null,
  }));
}

export type AnswerDraft = Map<string, "must_avoid" | "must_visit" | "neither">;

export function answerKey(state: string, kind: string): string {
  return `${state}|${kind}`;
}

// The API demands one verdict per pending query; submission stays blocked
// until the draft covers them all.
export function draftComplete(session: SessionResource, draft: AnswerDraft): boolean {
  return session.pending.every((p) => draft.has(answerKey(p.state, p.kind)));
}

export function validVerdicts(kind: "forbidden" | "goal"): ("must_avoid" | "must_visit" | "neither")[] {
  return kind === "forbidden" ? ["must_avoid", "neither"] : ["must_visit", "neither"];
}
