/** Browser entry point: read the service base URL (the only
 * configuration) and boot the console into #app.
 */

import { App } from "./app.js";

declare global {
  interface Window {
    VRI_BASE_URL?: string;
  }
}

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? window.VRI_BASE_URL ?? "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app container");
}
App.boot({ baseUrl, root }).catch((err: unknown) => {
  root.innerHTML = `<p class="status">failed to reach the service at ${baseUrl}: ${String(err)}</p>`;
});
