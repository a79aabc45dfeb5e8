// Entry point: pick the panel from the URL hash. The teacher and the
// supervisor open the same app in different windows:
//   /            -> teacher chat
//   /#supervisor or /#supervisor=TOKEN -> supervisor dashboard

import { ApiClient } from "./client.js";
import { SupervisorPanel } from "./supervisor.js";
import { TeacherPanel } from "./teacher.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const hash = window.location.hash.slice(1);
  const baseUrl = window.location.origin;
  if (hash.startsWith("supervisor")) {
    const token = hash.includes("=") ? hash.split("=", 2)[1] : "";
    const client = new ApiClient({ baseUrl, token });
    void new SupervisorPanel(client, root).start();
  } else {
    const client = new ApiClient({ baseUrl });
    void new TeacherPanel(client, root).start();
  }
}

window.addEventListener("hashchange", () => window.location.reload());
document.addEventListener("DOMContentLoaded", boot);
