import type { InstanceDoc, SessionResource } from "../src/api.js";

export const corridorDoc: InstanceDoc = {
  name: "corridor",
  states: ["s0", "W", "A", "g"],
};

export const gridDoc: InstanceDoc = {
  name: "mini",
  states: ["0,0", "0,1", "1,0", "1,1"],
  layout: {
    width: 2,
    height: 2,
    cells: [
      [0, 0, "start"],
      [1, 1, "goal"],
      [0, 1, "forbidden"],
    ],
  },
};

export function awaitingSession(): SessionResource {
  return {
    id: "abc",
    instance: "corridor",
    status: "awaiting_answers",
    iteration: 0,
    pending: [
      { state: "W", kind: "forbidden", prompt: "Do I need to avoid state 'W'?" },
      { state: "A", kind: "goal", prompt: "Do I need to visit state 'A'?" },
    ],
    history: [],
    candidates: { forbidden: ["W"], goal: ["s0", "A", "g"] },
    confirmed: { forbidden: [], goal: [] },
    policy: null,
  };
}

export function solvedSession(): SessionResource {
  return {
    id: "abc",
    instance: "corridor",
    status: "solved",
    iteration: 1,
    pending: [],
    history: [
      { state: "W", kind: "forbidden", verdict: "neither", iteration: 1 },
      { state: "A", kind: "goal", verdict: "neither", iteration: 1 },
    ],
    candidates: { forbidden: [], goal: ["s0", "g"] },
    confirmed: { forbidden: [], goal: [] },
    policy: {
      actions: { s0: "aW", W: "aG", A: "aW", g: "aW" },
      occupancy: { s0: 1.0, W: 0.9, A: 0.0, g: 8.1 },
    },
  };
}

export function gridSession(): SessionResource {
  return {
    id: "g1",
    instance: "mini",
    status: "awaiting_answers",
    iteration: 0,
    pending: [{ state: "0,1", kind: "forbidden", prompt: "Do I need to avoid cell (0, 1)?" }],
    history: [],
    candidates: { forbidden: ["0,1"], goal: ["0,0", "1,1"] },
    confirmed: { forbidden: [], goal: ["1,0"] },
    policy: null,
  };
}
