// Snapshot-style rendering tests against payloads recorded from the live
// service. The UI must show exactly what the service said, no more.
import { Window } from "happy-dom";
import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { StatePayload, TracePayload } from "../src/api.js";
import { groupEnabled, render, Snapshot } from "../src/view.js";

function fixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

const noopHandlers = {
  onFire: () => {},
  onUndo: () => {},
  onReset: () => {},
  onRetry: () => {},
};

function draw(snapshot: Partial<Snapshot>) {
  const window = new Window();
  const document = window.document;
  document.body.innerHTML = `<div id="app"></div>`;
  const root = document.getElementById("app") as unknown as HTMLElement;
  const full: Snapshot = {
    state: null,
    trace: null,
    notice: null,
    stale: false,
    busy: false,
    ...snapshot,
  };
  render(root, full, noopHandlers);
  return root;
}

describe("alarm banner", () => {
  it("renders prominently for ALM377", () => {
    const root = draw({ state: fixture<StatePayload>("state_alm377.json") });
    const banner = root.querySelector('[data-testid="alarm-banner"]');
    expect(banner).not.toBeNull();
    expect(banner!.textContent).toContain("ALM377");
  });

  it("renders for ALM639", () => {
    const root = draw({ state: fixture<StatePayload>("state_alm639.json") });
    const banner = root.querySelector('[data-testid="alarm-banner"]');
    expect(banner).not.toBeNull();
    expect(banner!.textContent).toContain("ALM639");
  });

  it("does not render for NoAlarm", () => {
    const root = draw({ state: fixture<StatePayload>("state_init.json") });
    expect(root.querySelector('[data-testid="alarm-banner"]')).toBeNull();
  });
});

describe("state rendering", () => {
  it("shows every variable name and value from the payload", () => {
    const payload = fixture<StatePayload>("state_init.json");
    const root = draw({ state: payload });
    for (const [name, value] of Object.entries(payload.state)) {
      const row = root.querySelector(`[data-var="${name}"]`);
      expect(row, name).not.toBeNull();
      expect(row!.textContent).toContain(value);
    }
    expect(root.textContent).toContain("{Dialysate |-> DialyserConnected}");
  });

  it("shows invariant flags with pass/fail classes", () => {
    const payload = fixture<StatePayload>("state_init.json");
    const root = draw({ state: payload });
    for (const label of Object.keys(payload.invariant_flags)) {
      const item = root.querySelector(`[data-invariant="${label}"]`);
      expect(item).not.toBeNull();
      expect(item!.className).toBe("inv-ok");
    }
  });

  it("renders one button per enabled event name", () => {
    const payload = fixture<StatePayload>("state_init.json");
    const root = draw({ state: payload });
    const events = new Set(payload.enabled.map((e) => e.event));
    const buttons = root.querySelectorAll("button.fire");
    expect(buttons.length).toBe(events.size);
    for (const name of events) {
      expect(root.querySelector(`[data-fire="${name}"]`)).not.toBeNull();
    }
  });

  it("offers binding selects populated from enabled bindings only", () => {
    const payload = fixture<StatePayload>("state_init.json");
    const root = draw({ state: payload });
    const row = root.querySelector('[data-event="setTemperature"]');
    expect(row).not.toBeNull();
    const select = row!.querySelector('select[data-param="t"]');
    expect(select).not.toBeNull();
    const options = Array.from(select!.querySelectorAll("option")).map(
      (o) => o.getAttribute("value"),
    );
    const served = payload.enabled
      .filter((e) => e.event === "setTemperature")
      .map((e) => e.binding.t);
    expect(options).toEqual(served);
  });

  it("shows the DEADLOCK badge when nothing is enabled", () => {
    const payload = fixture<StatePayload>("state_deadlock.json");
    const root = draw({ state: payload });
    expect(root.querySelector('[data-testid="deadlock"]')).not.toBeNull();
    expect(root.querySelectorAll("button.fire").length).toBe(0);
  });

  it("keeps the trace list empty on a fresh init payload", () => {
    const root = draw({
      state: fixture<StatePayload>("state_init.json"),
      trace: fixture<TracePayload>("trace_empty.json"),
    });
    const items = root.querySelectorAll('[data-testid="trace"] li');
    expect(items.length).toBe(0);
  });

  it("lists fired steps from the trace payload", () => {
    const root = draw({
      state: fixture<StatePayload>("state_alm377.json"),
      trace: fixture<TracePayload>("trace_alm377.json"),
    });
    const items = Array.from(
      root.querySelectorAll('[data-testid="trace"] li'),
    ).map((li) => li.textContent);
    expect(items).toEqual([
      "selectOperation op=Priming",
      "setTemperature t=42",
      "disconnectDialyserPreparation",
    ]);
  });

  it("disables undo at trace length zero", () => {
    const root = draw({
      state: fixture<StatePayload>("state_init.json"),
      trace: fixture<TracePayload>("trace_empty.json"),
    });
    const undo = root.querySelector('[data-testid="undo"]') as HTMLButtonElement;
    expect(undo.disabled).toBe(true);
  });

  it("disables all action buttons while a request is pending", () => {
    const root = draw({
      state: fixture<StatePayload>("state_init.json"),
      busy: true,
    });
    const buttons = Array.from(root.querySelectorAll("button"));
    expect(buttons.length).toBeGreaterThan(0);
    for (const b of buttons) {
      expect((b as HTMLButtonElement).disabled).toBe(true);
    }
  });

  it("marks the view stale with a retry control on network failure", () => {
    const root = draw({
      state: fixture<StatePayload>("state_init.json"),
      stale: true,
    });
    expect(root.querySelector('[data-testid="stale"]')).not.toBeNull();
    expect(root.querySelector('[data-testid="retry"]')).not.toBeNull();
  });

  it("shows a non-blocking notice", () => {
    const root = draw({
      state: fixture<StatePayload>("state_init.json"),
      notice: "tick: EventNotEnabled",
    });
    const notice = root.querySelector('[data-testid="notice"]');
    expect(notice!.textContent).toContain("EventNotEnabled");
    expect(root.querySelectorAll("button.fire").length).toBeGreaterThan(0);
  });
});

describe("groupEnabled", () => {
  it("groups bindings per event and dedups values", () => {
    const grouped = groupEnabled([
      { event: "a", binding: { x: "1" } },
      { event: "a", binding: { x: "2" } },
      { event: "a", binding: { x: "1" } },
      { event: "b", binding: {} },
    ]);
    expect([...grouped.keys()]).toEqual(["a", "b"]);
    expect(grouped.get("a")!.get("x")).toEqual(["1", "2"]);
    expect(grouped.get("b")!.size).toBe(0);
  });
});
