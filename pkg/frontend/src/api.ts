// Typed client for the prediction service wire format.

export interface TopFeature {
  name: string;
  value: number | null;
  importance: number;
}

export interface PredictResponse {
  label: "phishing" | "valid";
  probability: number;
  p_cnn: number;
  p_gbdt: number;
  weights: { w_cnn: number; w_gbdt: number };
  threshold: number;
  top_features: TopFeature[];
  latency_ms: number;
  model_version: string;
}

export interface HealthResponse {
  status: string;
  model_version: string | null;
  uptime_s: number;
}

export interface ErrorBody {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public body: ErrorBody,
  ) {
    super(body.message);
  }
}

export type HealthState = "ok" | "degraded" | "unreachable";

export class ApiClient {
  constructor(public baseUrl: string) {}

  async predict(url: string): Promise<PredictResponse> {
    const resp = await fetch(`${this.baseUrl}/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ url }),
    });
    if (!resp.ok) {
      let body: ErrorBody;
      try {
        body = (await resp.json()) as ErrorBody;
      } catch {
        body = { code: "http_error", message: `service returned ${resp.status}` };
      }
      throw new ServiceError(resp.status, body);
    }
    return (await resp.json()) as PredictResponse;
  }

  /** Health probe folded to the indicator states; never throws. */
  async health(): Promise<HealthState> {
    try {
      const resp = await fetch(`${this.baseUrl}/health`);
      if (resp.ok) return "ok";
      if (resp.status === 503) return "degraded";
      return "unreachable";
    } catch {
      return "unreachable";
    }
  }
}
