/**
 * Browser bootstrap: wire the controller to the DOM and start a session
 * against the service that serves this page.
 */
import "./style.css";
import { ApiClient } from "./client";
import { ConsoleController } from "./controller";
import { renderApp, type Handlers } from "./render";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app root element");

let lastAttempt: string | null = null;

const controller = new ConsoleController(new ApiClient(), (state) => {
  renderApp(root, state, handlers);
});

const handlers: Handlers = {
  onSubmit: (text) => {
    lastAttempt = text;
    void controller.submit(text);
  },
  onRetry: () => {
    if (lastAttempt !== null) void controller.submit(lastAttempt);
  },
  onUndo: () => void controller.undo(),
  onReset: () => void controller.reset(),
  onInspect: (entry) => controller.inspect(entry),
};

void controller.start();
