// DOM rendering: small pure helpers, no framework.

import type { HealthState, PredictResponse } from "./api.js";
import type { HistoryEntry } from "./state.js";

export function formatProbability(p: number): string {
  return p.toFixed(4);
}

export function badgeClass(label: PredictResponse["label"]): string {
  return label === "phishing" ? "badge badge-phishing" : "badge badge-valid";
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderVerdict(container: HTMLElement, r: PredictResponse): void {
  container.innerHTML = "";

  const badge = el("span", badgeClass(r.label), r.label);
  badge.dataset.testid = "label-badge";
  container.appendChild(badge);

  const probText = el("div", "prob-text", formatProbability(r.probability));
  probText.dataset.testid = "probability";
  container.appendChild(probText);

  const bar = el("div", "prob-bar");
  const fill = el("div", `prob-fill ${r.label === "phishing" ? "fill-red" : "fill-green"}`);
  fill.style.width = `${(r.probability * 100).toFixed(1)}%`;
  fill.dataset.testid = "probability-bar";
  bar.appendChild(fill);
  container.appendChild(bar);

  const parts = el("div", "model-parts");
  const cnn = el(
    "span",
    "model-part",
    `char-cnn ${formatProbability(r.p_cnn)} (w ${r.weights.w_cnn.toFixed(2)})`,
  );
  cnn.dataset.testid = "p-cnn";
  const gbdt = el(
    "span",
    "model-part",
    `gbdt ${formatProbability(r.p_gbdt)} (w ${r.weights.w_gbdt.toFixed(2)})`,
  );
  gbdt.dataset.testid = "p-gbdt";
  parts.append(cnn, gbdt);
  container.appendChild(parts);

  const table = el("table", "features");
  table.dataset.testid = "top-features";
  const head = el("tr");
  for (const h of ["feature", "value", "importance"]) head.appendChild(el("th", "", h));
  table.appendChild(head);
  for (const f of r.top_features) {
    const row = el("tr");
    row.appendChild(el("td", "", f.name));
    row.appendChild(el("td", "", f.value === null ? "n/a" : String(f.value)));
    row.appendChild(el("td", "", f.importance.toFixed(3)));
    table.appendChild(row);
  }
  container.appendChild(table);

  const meta = el(
    "div",
    "meta",
    `${r.latency_ms.toFixed(1)} ms · model ${r.model_version} · threshold ${r.threshold}`,
  );
  meta.dataset.testid = "latency";
  container.appendChild(meta);
}

export function renderHistory(container: HTMLElement, entries: ReadonlyArray<HistoryEntry>): void {
  container.innerHTML = "";
  for (const entry of entries) {
    const row = el("div", "history-row");
    row.appendChild(el("span", badgeClass(entry.response.label), entry.response.label));
    row.appendChild(el("span", "history-prob", formatProbability(entry.response.probability)));
    row.appendChild(el("span", "history-url", entry.url));
    container.appendChild(row);
  }
}

export function showBanner(banner: HTMLElement, message: string): void {
  banner.textContent = message;
  banner.classList.remove("hidden");
}

export function hideBanner(banner: HTMLElement): void {
  banner.textContent = "";
  banner.classList.add("hidden");
}

export function setHealthDot(dot: HTMLElement, state: HealthState): void {
  dot.className = `health-dot health-${state === "ok" ? "green" : state === "degraded" ? "amber" : "red"}`;
  dot.title = state;
}
