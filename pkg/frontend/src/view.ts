// DOM rendering. Pure functions of the latest service payloads: the view
// never computes guard truth or next states itself.

import { EnabledEntry, StatePayload, TracePayload } from "./api.js";

export interface Handlers {
  onFire: (event: string, binding: Record<string, string>) => void;
  onUndo: () => void;
  onReset: () => void;
  onRetry: () => void;
}

export interface Snapshot {
  state: StatePayload | null;
  trace: TracePayload | null;
  notice: string | null;
  stale: boolean;
  busy: boolean;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

// Groups the flat (event, binding) list by event name and collects, per
// parameter, the values that occur in some enabled binding. The selects are
// populated from that list, so the user can only request combinations the
// service itself offered.
export function groupEnabled(entries: EnabledEntry[]): Map<string, Map<string, string[]>> {
  const grouped = new Map<string, Map<string, string[]>>();
  for (const entry of entries) {
    let params = grouped.get(entry.event);
    if (!params) {
      params = new Map();
      grouped.set(entry.event, params);
    }
    for (const [name, value] of Object.entries(entry.binding)) {
      let values = params.get(name);
      if (!values) {
        values = [];
        params.set(name, values);
      }
      if (!values.includes(value)) {
        values.push(value);
      }
    }
  }
  return grouped;
}

function renderAlarm(doc: Document, root: HTMLElement, alarm: string | null) {
  if (alarm !== null && alarm !== "NoAlarm") {
    const banner = el(doc, "div", {
      class: "alarm-banner",
      "data-testid": "alarm-banner",
      role: "alert",
    }, `ALARM ${alarm}`);
    root.appendChild(banner);
  }
}

function renderStatePanel(doc: Document, root: HTMLElement, payload: StatePayload) {
  const panel = el(doc, "section", { class: "panel", "data-testid": "variables" });
  panel.appendChild(el(doc, "h2", {}, "State"));
  const table = el(doc, "table", {});
  for (const [name, value] of Object.entries(payload.state)) {
    const row = el(doc, "tr", { "data-var": name });
    row.appendChild(el(doc, "td", { class: "var-name" }, name));
    row.appendChild(el(doc, "td", { class: "var-value" }, value));
    table.appendChild(row);
  }
  panel.appendChild(table);
  root.appendChild(panel);
}

function renderInvariants(doc: Document, root: HTMLElement, payload: StatePayload) {
  const panel = el(doc, "section", { class: "panel", "data-testid": "invariants" });
  panel.appendChild(el(doc, "h2", {}, "Invariants"));
  const list = el(doc, "ul", {});
  for (const [label, ok] of Object.entries(payload.invariant_flags)) {
    const item = el(doc, "li", {
      class: ok ? "inv-ok" : "inv-bad",
      "data-invariant": label,
    }, `${label}: ${ok ? "holds" : "VIOLATED"}`);
    list.appendChild(item);
  }
  panel.appendChild(list);
  root.appendChild(panel);
}

function renderEvents(
  doc: Document,
  root: HTMLElement,
  payload: StatePayload,
  handlers: Handlers,
  busy: boolean,
) {
  const panel = el(doc, "section", { class: "panel", "data-testid": "events" });
  panel.appendChild(el(doc, "h2", {}, "Enabled events"));
  if (payload.deadlock) {
    panel.appendChild(el(doc, "div", {
      class: "deadlock-badge",
      "data-testid": "deadlock",
    }, "DEADLOCK"));
  }
  for (const [event, params] of groupEnabled(payload.enabled)) {
    const row = el(doc, "div", { class: "event-row", "data-event": event });
    const selects = new Map<string, HTMLSelectElement>();
    for (const [pname, values] of params) {
      const label = el(doc, "label", {}, `${pname} = `);
      const select = el(doc, "select", { "data-param": pname });
      for (const v of values) {
        select.appendChild(el(doc, "option", { value: v }, v));
      }
      if (busy) {
        select.disabled = true;
      }
      label.appendChild(select);
      selects.set(pname, select);
      row.appendChild(label);
    }
    const button = el(doc, "button", { class: "fire", "data-fire": event }, event);
    button.disabled = busy;
    button.addEventListener("click", () => {
      const binding: Record<string, string> = {};
      for (const [pname, select] of selects) {
        binding[pname] = select.value;
      }
      handlers.onFire(event, binding);
    });
    row.appendChild(button);
    panel.appendChild(row);
  }
  root.appendChild(panel);
}

function renderTrace(doc: Document, root: HTMLElement, trace: TracePayload | null) {
  const panel = el(doc, "section", { class: "panel", "data-testid": "trace" });
  panel.appendChild(el(doc, "h2", {}, "Trace"));
  const list = el(doc, "ol", { class: "trace-list" });
  for (const step of trace?.steps ?? []) {
    const args = Object.entries(step.binding)
      .map(([k, v]) => ` ${k}=${v}`)
      .join("");
    list.appendChild(el(doc, "li", {}, `${step.event}${args}`));
  }
  panel.appendChild(list);
  root.appendChild(panel);
}

export function render(root: HTMLElement, snapshot: Snapshot, handlers: Handlers): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const payload = snapshot.state;

  const header = el(doc, "header", {});
  header.appendChild(el(doc, "h1", {},
    payload ? `${payload.machine} animator` : "animator"));
  if (snapshot.stale) {
    const staleBox = el(doc, "div", { class: "stale", "data-testid": "stale" });
    staleBox.appendChild(el(doc, "span", {}, "connection lost, view is stale "));
    const retry = el(doc, "button", { "data-testid": "retry" }, "retry");
    retry.addEventListener("click", handlers.onRetry);
    staleBox.appendChild(retry);
    header.appendChild(staleBox);
  }
  if (snapshot.notice) {
    header.appendChild(el(doc, "div", {
      class: "notice",
      "data-testid": "notice",
    }, snapshot.notice));
  }
  root.appendChild(header);

  if (!payload) {
    return;
  }

  renderAlarm(doc, root, payload.alarm);
  if (payload.init_violations.length > 0) {
    root.appendChild(el(doc, "div", {
      class: "init-violations",
      "data-testid": "init-violations",
    }, `initial state violates: ${payload.init_violations.join(", ")}`));
  }

  const columns = el(doc, "main", { class: "columns" });
  renderStatePanel(doc, columns, payload);
  renderInvariants(doc, columns, payload);
  renderEvents(doc, columns, payload, handlers, snapshot.busy);
  renderTrace(doc, columns, snapshot.trace);
  root.appendChild(columns);

  const controls = el(doc, "footer", { class: "controls" });
  const undo = el(doc, "button", { "data-testid": "undo" }, "undo");
  undo.disabled = snapshot.busy || payload.trace_len === 0;
  undo.addEventListener("click", handlers.onUndo);
  const reset = el(doc, "button", { "data-testid": "reset" }, "reset");
  reset.disabled = snapshot.busy;
  reset.addEventListener("click", handlers.onReset);
  controls.appendChild(undo);
  controls.appendChild(reset);
  controls.appendChild(el(doc, "span", { class: "trace-len" },
    `${payload.trace_len} step(s)`));
  root.appendChild(controls);
}
