// Application wiring: one in-flight request at a time; every render comes
// from the latest service payload.

import { api, isError } from "./api.js";
import { Handlers, render, Snapshot } from "./view.js";

export class App {
  private snapshot: Snapshot = {
    state: null,
    trace: null,
    notice: null,
    stale: false,
    busy: false,
  };

  constructor(private root: HTMLElement, private base: string) {}

  private draw(): void {
    const handlers: Handlers = {
      onFire: (event, binding) => void this.fireAndRefresh(event, binding),
      onUndo: () => void this.undo(),
      onReset: () => void this.reset(),
      onRetry: () => void this.refresh(),
    };
    render(this.root, this.snapshot, handlers);
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    if (this.snapshot.busy) {
      return; // single in-flight request; buttons are disabled anyway
    }
    this.snapshot = { ...this.snapshot, busy: true };
    this.draw();
    try {
      await action();
      this.snapshot = { ...this.snapshot, stale: false };
    } catch {
      this.snapshot = { ...this.snapshot, stale: true };
    }
    this.snapshot = { ...this.snapshot, busy: false };
    this.draw();
  }

  async refresh(): Promise<void> {
    await this.guarded(async () => {
      const state = await api.state(this.base);
      const trace = await api.trace(this.base);
      this.snapshot = { ...this.snapshot, state, trace, notice: null };
    });
  }

  async fireAndRefresh(event: string, binding: Record<string, string>): Promise<void> {
    await this.guarded(async () => {
      const result = await api.fire(this.base, event, binding);
      if (isError(result)) {
        // non-blocking notice; re-sync the view with the service
        const state = await api.state(this.base);
        const trace = await api.trace(this.base);
        this.snapshot = {
          ...this.snapshot, state, trace,
          notice: `${event}: ${result.error}`,
        };
        return;
      }
      const trace = await api.trace(this.base);
      this.snapshot = { ...this.snapshot, state: result, trace, notice: null };
    });
  }

  async undo(): Promise<void> {
    await this.guarded(async () => {
      const result = await api.undo(this.base);
      if (isError(result)) {
        this.snapshot = { ...this.snapshot, notice: `undo: ${result.error}` };
        return;
      }
      const trace = await api.trace(this.base);
      this.snapshot = { ...this.snapshot, state: result, trace, notice: null };
    });
  }

  async reset(): Promise<void> {
    await this.guarded(async () => {
      const state = await api.reset(this.base);
      const trace = await api.trace(this.base);
      this.snapshot = { ...this.snapshot, state, trace, notice: null };
    });
  }

  // test hooks
  current(): Snapshot {
    return this.snapshot;
  }

  setSnapshot(snapshot: Partial<Snapshot>): void {
    this.snapshot = { ...this.snapshot, ...snapshot };
    this.draw();
  }
}

export function initApp(root: HTMLElement, base = ""): App {
  const app = new App(root, base);
  void app.refresh();
  return app;
}

declare global {
  interface Window {
    __specforgeApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.__specforgeApp = initApp(document.getElementById("app") as HTMLElement);
}
