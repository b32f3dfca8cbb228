/** App wiring: hash routing, API calls, stale-session recovery.
 *
 * The session id lives in the URL hash, so a reload lands on the same
 * session and rebuilds the identical view from the API snapshot.
 */

import { ApiError, WizardApi, type SessionSnapshot } from "./api";
import { renderCreateForm, renderSession, type ViewState } from "./render";

export class WizardApp {
  private view: ViewState = { showFullGraph: false, error: null };
  private snapshot: SessionSnapshot | null = null;
  private onHashChange = () => {
    void this.route();
  };

  constructor(
    private root: HTMLElement,
    private api: WizardApi,
    private win: Window = window,
  ) {}

  async start(): Promise<void> {
    this.win.addEventListener("hashchange", this.onHashChange);
    await this.route();
  }

  stop(): void {
    this.win.removeEventListener("hashchange", this.onHashChange);
  }

  sessionIdFromHash(): string | null {
    const match = this.win.location.hash.match(/^#\/session\/(\w+)$/);
    return match ? match[1] : null;
  }

  async route(): Promise<void> {
    const id = this.sessionIdFromHash();
    if (!id) {
      this.snapshot = null;
      this.renderForm();
      return;
    }
    try {
      this.snapshot = await this.api.getSession(id);
      this.view.error = null;
    } catch (err) {
      this.snapshot = null;
      this.view.error = err instanceof ApiError ? err.message : String(err);
      this.renderForm();
      return;
    }
    this.render();
  }

  private renderForm(): void {
    if (typeof document === "undefined") return;  // torn-down test window
    renderCreateForm(this.root, this.view.error, {
      onCreate: (params) => {
        void this.create(params);
      },
    });
  }

  private async create(params: Parameters<WizardApi["createSession"]>[0]): Promise<void> {
    try {
      const snapshot = await this.api.createSession(params);
      this.snapshot = snapshot;
      this.view = { showFullGraph: false, error: null };
      this.win.location.hash = `#/session/${snapshot.session_id}`;
      this.render();
    } catch (err) {
      this.view.error = err instanceof ApiError ? err.message : String(err);
      this.renderForm();
    }
  }

  private async answer(edge: string, value: "on" | "off", version: number): Promise<void> {
    if (!this.snapshot) return;
    try {
      this.snapshot = await this.api.answer(this.snapshot.session_id, edge, value, version);
      this.view.error = null;
    } catch (err) {
      if (err instanceof ApiError && err.code === "version_conflict") {
        // stale tab: refresh the snapshot and let the user retry
        this.snapshot = await this.api.getSession(this.snapshot.session_id);
        this.view.error = "Session changed elsewhere; refreshed.";
      } else {
        this.view.error = err instanceof ApiError ? err.message : String(err);
      }
    }
    this.render();
  }

  render(): void {
    if (typeof document === "undefined") return;  // torn-down test window
    if (!this.snapshot) {
      this.renderForm();
      return;
    }
    renderSession(this.root, this.snapshot, this.view, {
      onAnswer: (edge, value, version) => {
        void this.answer(edge, value, version);
      },
      onToggleFullGraph: () => {
        this.view.showFullGraph = !this.view.showFullGraph;
        this.render();
      },
      onNewSession: () => {
        this.win.location.hash = "";
        this.snapshot = null;
        this.view = { showFullGraph: false, error: null };
        this.renderForm();
      },
    });
  }
}

export function mount(root: HTMLElement, baseUrl = "", win: Window = window): WizardApp {
  const app = new WizardApp(root, new WizardApi(baseUrl), win);
  void app.start();
  return app;
}

declare global {
  interface Window {
    __STPROBE_NO_AUTOMOUNT__?: boolean;
  }
}

if (typeof document !== "undefined" && !window.__STPROBE_NO_AUTOMOUNT__) {
  const root = document.getElementById("app");
  if (root) mount(root);
}
