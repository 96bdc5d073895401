// Typed client for the animator's JSON protocol. The UI performs no semantic
// computation: everything it shows originates from these payloads.

export interface EnabledEntry {
  event: string;
  binding: Record<string, string>;
}

export interface StatePayload {
  machine: string;
  state: Record<string, string>;
  invariant_flags: Record<string, boolean>;
  alarm: string | null;
  enabled: EnabledEntry[];
  trace_len: number;
  init_violations: string[];
  deadlock: boolean;
}

export interface TraceStep {
  event: string;
  binding: Record<string, string>;
  state: Record<string, string>;
}

export interface TracePayload {
  init: Record<string, string>;
  steps: TraceStep[];
}

export interface MachinePayload {
  machine: string;
  refines: string | null;
  variables: { name: string; type: string }[];
  invariants: { label: string; text: string }[];
  events: {
    name: string;
    status: string;
    params: { name: string; type: string }[];
    guards: { label: string; text: string }[];
    actions: string[];
  }[];
  scenarios: string[];
}

export interface ScenarioResult {
  name: string;
  passed: boolean;
  steps_run: number;
  failed_step: number | null;
  reason: string;
}

export interface ErrorPayload {
  error: string;
  detail?: string;
}

export type FireResult = StatePayload | ErrorPayload;

export function isError(p: FireResult): p is ErrorPayload {
  return (p as ErrorPayload).error !== undefined;
}

async function getJson<T>(base: string, path: string): Promise<T> {
  const response = await fetch(base + path);
  return (await response.json()) as T;
}

async function postJson<T>(base: string, path: string, body: unknown): Promise<T> {
  const response = await fetch(base + path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body ?? {}),
  });
  return (await response.json()) as T;
}

export const api = {
  state: (base: string) => getJson<StatePayload>(base, "/api/state"),
  trace: (base: string) => getJson<TracePayload>(base, "/api/trace"),
  machine: (base: string) => getJson<MachinePayload>(base, "/api/machine"),
  fire: (base: string, event: string, binding: Record<string, string>) =>
    postJson<FireResult>(base, "/api/fire", { event, binding }),
  undo: (base: string) => postJson<FireResult>(base, "/api/undo", {}),
  reset: (base: string) => postJson<StatePayload>(base, "/api/reset", {}),
  runScenario: (base: string, name: string) =>
    postJson<ScenarioResult | ErrorPayload>(base, "/api/scenario/run", { name }),
};
