// App assembly: builds the console inside a root element and wires events.
// Exported as a factory so DOM-level tests can drive it against a stub.

import { ApiClient, ServiceError } from "./api.js";
import { initialState, pushHistory, type UiState } from "./state.js";
import {
  hideBanner,
  renderHistory,
  renderVerdict,
  setHealthDot,
  showBanner,
} from "./ui.js";

export interface AppOptions {
  baseUrl?: string;
  healthIntervalMs?: number;
  client?: ApiClient;
}

export interface AppHandle {
  state: UiState;
  submit: () => Promise<void>;
  pollHealth: () => Promise<void>;
  stop: () => void;
  root: HTMLElement;
}

const TEMPLATE = `
  <header>
    <span class="health-dot health-red" data-testid="health-dot"></span>
    <h1>phishkit console</h1>
    <label class="settings">
      service
      <input type="text" data-testid="base-url" class="base-url" />
    </label>
  </header>
  <div class="banner hidden" data-testid="error-banner"></div>
  <form data-testid="url-form">
    <input
      type="text"
      data-testid="url-input"
      placeholder="paste a URL to check, e.g. http://login-verify.example.tk/update"
      autocomplete="off"
    />
    <button type="submit" data-testid="submit">check</button>
  </form>
  <section class="verdict" data-testid="verdict"></section>
  <h2>session history</h2>
  <section class="history" data-testid="history"></section>
`;

export function createApp(root: HTMLElement, options: AppOptions = {}): AppHandle {
  const baseUrl = options.baseUrl ?? "";
  const state = initialState(baseUrl);
  let client = options.client ?? new ApiClient(baseUrl);

  root.innerHTML = TEMPLATE;
  const q = <T extends HTMLElement>(sel: string): T => {
    const node = root.querySelector<T>(sel);
    if (!node) throw new Error(`missing ${sel}`);
    return node;
  };
  const form = q<HTMLFormElement>('[data-testid="url-form"]');
  const input = q<HTMLInputElement>('[data-testid="url-input"]');
  const submitBtn = q<HTMLButtonElement>('[data-testid="submit"]');
  const verdict = q<HTMLElement>('[data-testid="verdict"]');
  const history = q<HTMLElement>('[data-testid="history"]');
  const banner = q<HTMLElement>('[data-testid="error-banner"]');
  const dot = q<HTMLElement>('[data-testid="health-dot"]');
  const baseUrlInput = q<HTMLInputElement>('[data-testid="base-url"]');
  baseUrlInput.value = baseUrl;

  banner.addEventListener("click", () => hideBanner(banner));
  baseUrlInput.addEventListener("change", () => {
    state.baseUrl = baseUrlInput.value.trim().replace(/\/$/, "");
    client = new ApiClient(state.baseUrl);
  });

  async function submit(): Promise<void> {
    const url = input.value.trim();
    if (!url || state.pending) return; // local validation: no request sent
    state.pending = true;
    input.disabled = true;
    submitBtn.disabled = true;
    hideBanner(banner);
    try {
      const response = await client.predict(url);
      state.lastUrl = url;
      state.lastResponse = response;
      pushHistory(state, { url, response, at: new Date().toISOString() });
      renderVerdict(verdict, response);
      renderHistory(history, state.history);
      input.value = "";
    } catch (err) {
      state.error =
        err instanceof ServiceError
          ? `${err.body.code}: ${err.body.message}`
          : "service unavailable";
      showBanner(banner, state.error);
      // input value intentionally preserved for retry
    } finally {
      state.pending = false;
      input.disabled = false;
      submitBtn.disabled = false;
    }
  }

  async function pollHealth(): Promise<void> {
    setHealthDot(dot, await client.health());
  }

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void submit();
  });

  const interval = setInterval(() => void pollHealth(), options.healthIntervalMs ?? 10_000);
  void pollHealth();

  return {
    state,
    submit,
    pollHealth,
    stop: () => clearInterval(interval),
    root,
  };
}
