import { EventChannel, SocketFactory } from "./channel.js";
import { EventEnvelope, displayViewFromPayload } from "./model.js";
import { ProjectionView } from "./view.js";

export const ACK_TIMEOUT_MS = 2000;

export interface AppOptions {
  factory?: SocketFactory;
  ackTimeoutMs?: number;
}

/**
 * Wires the channel to the view and owns the operator escape hatches.
 * The cook's input stays on the tracked dial; the buttons and keyboard
 * shortcuts exist for desk runs. One command is in flight at a time:
 * controls re-enable on the core's next derived event or after a timeout.
 */
export class App {
  readonly view: ProjectionView;
  private readonly channel: EventChannel;
  private readonly ackTimeoutMs: number;
  private readonly buttons: HTMLButtonElement[] = [];
  private lastImageRef: string | null = null;
  private pendingAck: ReturnType<typeof setTimeout> | null = null;

  constructor(root: HTMLElement, url: string, options: AppOptions = {}) {
    this.view = new ProjectionView(root);
    this.ackTimeoutMs = options.ackTimeoutMs ?? ACK_TIMEOUT_MS;
    root.appendChild(this.buildControls());
    this.channel = new EventChannel(
      url,
      {
        onEnvelope: (env) => this.handleEnvelope(env),
        onStatus: (connected) => this.view.setConnected(connected),
      },
      options.factory,
    );
  }

  start(): void {
    this.channel.connect();
  }

  stop(): void {
    if (this.pendingAck !== null) clearTimeout(this.pendingAck);
    this.pendingAck = null;
    this.channel.close();
  }

  handleEnvelope(env: EventEnvelope): void {
    if (env.topic === "display") {
      const view = displayViewFromPayload(env.payload);
      if (view !== null) this.view.render(view);
      this.settleAck();
    } else if (env.topic === "detection") {
      const ref = (env.payload as Record<string, unknown> | null)?.image_ref;
      if (typeof ref === "string") this.lastImageRef = ref;
      this.settleAck();
    } else if (env.topic === "status") {
      this.settleAck();
    }
  }

  /** Re-run detection on the frame the core last reported. */
  redetect(): boolean {
    if (this.lastImageRef === null) return false;
    return this.command({ action: "detect", image_ref: this.lastImageRef });
  }

  resetSession(): boolean {
    return this.command({ action: "reset-session" });
  }

  setStep(step: number): boolean {
    if (!Number.isInteger(step) || step < 0) return false;
    return this.command({ action: "set-step", step });
  }

  get commandPending(): boolean {
    return this.pendingAck !== null;
  }

  /** Digits jump to that step (1-based), d re-detects, r resets. */
  bindKeyboard(target: Pick<Window, "addEventListener">): void {
    target.addEventListener("keydown", (event: KeyboardEvent) => {
      const key = event.key;
      if (key >= "1" && key <= "9") this.setStep(Number(key) - 1);
      else if (key === "d") this.redetect();
      else if (key === "r") this.resetSession();
    });
  }

  private command(payload: Record<string, unknown>): boolean {
    if (this.pendingAck !== null) return false;
    if (!this.channel.sendCommand(payload)) return false;
    this.setControlsEnabled(false);
    this.pendingAck = setTimeout(() => this.settleAck(), this.ackTimeoutMs);
    return true;
  }

  // any derived event after a command counts as its acknowledgment
  private settleAck(): void {
    if (this.pendingAck === null) return;
    clearTimeout(this.pendingAck);
    this.pendingAck = null;
    this.setControlsEnabled(true);
  }

  private setControlsEnabled(enabled: boolean): void {
    for (const button of this.buttons) button.disabled = !enabled;
  }

  private buildControls(): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "controls";
    const add = (label: string, onClick: () => void) => {
      const button = document.createElement("button");
      button.type = "button";
      button.textContent = label;
      button.addEventListener("click", onClick);
      bar.appendChild(button);
      this.buttons.push(button);
    };
    add("re-detect", () => this.redetect());
    add("reset", () => this.resetSession());
    return bar;
  }
}
