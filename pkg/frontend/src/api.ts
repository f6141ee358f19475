/** Typed client for the inference service; fetch is injectable for tests. */
import type { DecodeResponse, ModelInfo, SeedResponse } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(public code: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit =
      body === undefined
        ? { method: "GET" }
        : {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
          };
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const payload = await res.json();
    if (!res.ok) {
      throw new ServiceError(payload.code ?? res.status, payload.message ?? "request failed");
    }
    return payload as T;
  }

  modelInfo(): Promise<ModelInfo> {
    return this.request<ModelInfo>("/api/model");
  }

  seed(options: { n_atoms?: number; seed?: number } = {}): Promise<SeedResponse> {
    return this.request<SeedResponse>("/api/seed", options);
  }

  decode(
    session: string,
    overrides: { dim: number; value: number }[],
  ): Promise<DecodeResponse> {
    return this.request<DecodeResponse>("/api/decode", { session, overrides });
  }

  traverse(
    session: string,
    dim: number,
    lo: number,
    hi: number,
    steps: number,
  ): Promise<DecodeResponse[]> {
    return this.request<DecodeResponse[]>("/api/traverse", { session, dim, lo, hi, steps });
  }
}
