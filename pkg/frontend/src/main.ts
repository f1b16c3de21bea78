import { createApp } from "./app.js";

// When served from the prediction service under /ui/, the API lives at the
// same origin; the settings field can point anywhere else.
const root = document.getElementById("app");
if (root) {
  createApp(root, { baseUrl: window.location.origin });
}
