import { App } from "./app.js";

// Kiosk entry point: the core's address comes from query parameters so the
// projector machine needs no build-time configuration.
const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? (window.location.hostname || "127.0.0.1");
const port = params.get("port") ?? "9903";

const root = document.getElementById("root");
if (root === null) throw new Error("missing #root element");

const app = new App(root, `ws://${host}:${port}`);
app.bindKeyboard(window);
app.start();
