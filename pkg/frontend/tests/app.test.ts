import type { AddressInfo } from "node:net";
import { afterEach, beforeEach, describe, expect, it } from "vitest";
import { WebSocket, WebSocketServer } from "ws";
import { App } from "../src/app.js";
import { ChannelSocket, SocketFactory } from "../src/channel.js";
import { EventEnvelope, decodeEnvelope, encodeEnvelope } from "../src/model.js";
import {
  activeDisplayPayload,
  displayPayloadAtStep,
  highlightedIndices,
  idleDisplayPayload,
  until,
} from "./helpers.js";

const factory: SocketFactory = (url) => new WebSocket(url) as unknown as ChannelSocket;

/**
 * Stand-in for the core's UI channel: replays the latest display snapshot
 * to new clients and answers commands the way the session engine does.
 */
class StubCore {
  readonly server: WebSocketServer;
  url = "";
  readonly commands: EventEnvelope[] = [];
  snapshot: string | null = null;
  mute = false;
  private seq = 100;

  constructor() {
    this.server = new WebSocketServer({ host: "127.0.0.1", port: 0 });
    this.server.on("connection", (socket) => {
      if (this.snapshot !== null) socket.send(this.snapshot);
      socket.on("message", (data) => {
        const env = decodeEnvelope(data.toString());
        if (env === null || env.topic !== "command") return;
        this.commands.push(env);
        if (!this.mute) this.answer(socket, env.payload as Record<string, unknown>);
      });
    });
  }

  async ready(): Promise<void> {
    if (this.url !== "") return;
    await new Promise<void>((resolve) => this.server.once("listening", resolve));
    const { port } = this.server.address() as AddressInfo;
    this.url = `ws://127.0.0.1:${port}`;
  }

  send(socket: WebSocket, topic: "display" | "detection" | "status", payload: unknown): void {
    const text = encodeEnvelope({ payload, seq: this.seq++, timestamp: this.seq / 10, topic });
    if (topic === "display") this.snapshot = text;
    socket.send(text);
  }

  setSnapshot(payload: unknown): void {
    this.snapshot = encodeEnvelope({ payload, seq: this.seq++, timestamp: this.seq / 10, topic: "display" });
  }

  private answer(socket: WebSocket, payload: Record<string, unknown>): void {
    if (payload.action === "set-step") {
      this.send(socket, "display", displayPayloadAtStep(payload.step as number));
    } else if (payload.action === "detect") {
      this.send(socket, "detection", {
        image_ref: payload.image_ref,
        labels: [["tomato", 0.9]],
        model: "scripted",
      });
      this.send(socket, "display", activeDisplayPayload());
    } else if (payload.action === "reset-session") {
      this.send(socket, "status", { condition: "session-reset" });
      this.send(socket, "display", idleDisplayPayload());
    }
  }

  close(): void {
    this.server.close();
    for (const socket of this.server.clients) socket.terminate();
  }
}

let core: StubCore;
let apps: App[];

beforeEach(async () => {
  document.body.innerHTML = "";
  core = new StubCore();
  await core.ready();
  apps = [];
});

afterEach(() => {
  for (const app of apps) app.stop();
  core.close();
});

function startApp(options: { ackTimeoutMs?: number } = {}): { app: App; root: HTMLElement } {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new App(root, core.url, { factory, ...options });
  apps.push(app);
  app.start();
  return { app, root };
}

describe("session rendering", () => {
  it("reconstructs the view from the snapshot replayed on connect", async () => {
    core.setSnapshot(activeDisplayPayload());
    const { root } = startApp();
    await until(() => root.querySelectorAll(".box").length === 4, 5000, "boxes");
    expect(root.querySelectorAll(".bubble")).toHaveLength(5);
    expect(highlightedIndices(root)).toEqual([0]);
    expect(root.querySelector(".title")!.textContent).toBe("Guacamole");
  });

  it("set-step ends with the core's display at that step", async () => {
    core.setSnapshot(activeDisplayPayload());
    const { app, root } = startApp();
    await until(() => root.querySelectorAll(".box").length === 4, 5000, "initial snapshot");

    await until(() => app.setStep(3), 5000, "command accepted");
    await until(() => highlightedIndices(root)[0] === 3, 5000, "step 3 highlighted");
    expect(highlightedIndices(root)).toEqual([3]);
    expect(core.commands.map((env) => (env.payload as Record<string, unknown>).action)).toEqual(["set-step"]);
  });

  it("a fresh client rebuilds the identical view from the latest snapshot", async () => {
    core.setSnapshot(activeDisplayPayload());
    const first = startApp();
    await until(() => first.root.querySelectorAll(".box").length === 4, 5000, "first client");
    await until(() => first.app.setStep(2), 5000, "command accepted");
    await until(() => highlightedIndices(first.root)[0] === 2, 5000, "first at step 2");

    const second = startApp(); // a page refresh is just a new subscription
    await until(() => highlightedIndices(second.root)[0] === 2, 5000, "second at step 2");
    expect(second.root.querySelector(".stage")!.innerHTML).toBe(first.root.querySelector(".stage")!.innerHTML);
  });

  it("reset returns the surface to the splash", async () => {
    core.setSnapshot(activeDisplayPayload());
    const { app, root } = startApp();
    await until(() => root.querySelectorAll(".box").length === 4, 5000, "session view");
    await until(() => app.resetSession(), 5000, "command accepted");
    await until(() => root.querySelector(".stage")!.classList.contains("idle"), 5000, "idle stage");
    expect(root.querySelectorAll(".box")).toHaveLength(0);
  });
});

describe("operator commands", () => {
  it("re-detect resends the frame the core last reported", async () => {
    core.setSnapshot(activeDisplayPayload());
    const { app, root } = startApp();
    await until(() => root.querySelectorAll(".box").length === 4, 5000, "connected");

    // no detection seen yet, so there is nothing to re-run
    expect(app.redetect()).toBe(false);

    for (const socket of core.server.clients) {
      core.send(socket, "detection", { image_ref: "table.ppm", labels: [["tomato", 0.9]], model: "scripted" });
    }
    await until(() => app.redetect(), 5000, "re-detect accepted");
    await until(() => core.commands.length === 1, 5000, "command observed");
    expect(core.commands[0].payload).toEqual({ action: "detect", image_ref: "table.ppm" });
  });

  it("digit keys jump to that step", async () => {
    core.setSnapshot(activeDisplayPayload());
    const { app, root } = startApp();
    app.bindKeyboard(window);
    await until(() => root.querySelectorAll(".box").length === 4, 5000, "connected");

    window.dispatchEvent(new window.KeyboardEvent("keydown", { key: "3" }));
    await until(() => core.commands.length === 1, 5000, "command observed");
    expect(core.commands[0].payload).toEqual({ action: "set-step", step: 2 });
    await until(() => highlightedIndices(root)[0] === 2, 5000, "step 2 highlighted");
  });

  it("disables the controls until the reply arrives", async () => {
    core.setSnapshot(activeDisplayPayload());
    const { app, root } = startApp();
    await until(() => root.querySelectorAll(".box").length === 4, 5000, "connected");

    expect(app.setStep(1)).toBe(true);
    expect(app.commandPending).toBe(true);
    const buttons = Array.from(root.querySelectorAll("button"));
    expect(buttons.every((b) => b.disabled)).toBe(true);
    expect(app.setStep(2)).toBe(false); // one command in flight at a time

    await until(() => !app.commandPending, 5000, "acknowledged");
    expect(buttons.every((b) => !b.disabled)).toBe(true);
  });

  it("re-enables the controls 2 s after a lost reply", async () => {
    core.setSnapshot(activeDisplayPayload());
    core.mute = true;
    const { app, root } = startApp({ ackTimeoutMs: 200 });
    await until(() => root.querySelectorAll(".box").length === 4, 5000, "connected");

    expect(app.resetSession()).toBe(true);
    expect(app.commandPending).toBe(true);
    await until(() => !app.commandPending, 2000, "timeout release");
    const buttons = Array.from(root.querySelectorAll("button"));
    expect(buttons.every((b) => !b.disabled)).toBe(true);
  });
});
