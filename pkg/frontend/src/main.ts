/**
 * Browser entry point. The page is served by the API process (or any
 * same-origin static server); ?api= overrides the service origin and
 * ?session= attaches to an existing session instead of creating one.
 */
import { ApiClient } from "./api.js";
import { App } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "";
const sessionId = params.get("session") ?? undefined;

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app container");
}

const app = new App(root, new ApiClient(baseUrl));
void app.start(sessionId).catch((error) => {
  root.textContent = `failed to start: ${String(error)}`;
});
