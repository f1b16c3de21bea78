import type { PredictResponse } from "./api.js";

export const HISTORY_LIMIT = 50;

export interface HistoryEntry {
  readonly url: string;
  readonly response: Readonly<PredictResponse>;
  readonly at: string; // ISO timestamp, session-local only
}

export interface UiState {
  baseUrl: string;
  pending: boolean;
  lastUrl: string | null;
  lastResponse: PredictResponse | null;
  history: ReadonlyArray<HistoryEntry>;
  error: string | null;
}

export function initialState(baseUrl: string): UiState {
  return {
    baseUrl,
    pending: false,
    lastUrl: null,
    lastResponse: null,
    history: [],
    error: null,
  };
}

/** Append keeping at most HISTORY_LIMIT entries, newest first. */
export function pushHistory(state: UiState, entry: HistoryEntry): void {
  state.history = [entry, ...state.history].slice(0, HISTORY_LIMIT);
}
