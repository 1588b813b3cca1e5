/**
 * HTTP client for the judgment server.
 *
 * Network failures are retried with the SAME request body, so the
 * idempotency key (and the measured elapsed time) never change across
 * retries; the server deduplicates. A 409 stale-node conflict is not an
 * error here: it is reported to the caller, who silently refetches.
 */

import type { ErrorBody, JudgmentBody, JudgmentResponse, NextPayload } from './types.js';

export interface HttpResponse {
  status: number;
  body: unknown;
}

/** Minimal transport so tests can substitute a scripted server. */
export type Transport = (
  url: string,
  init: { method: string; headers: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export type SubmitResult =
  | { kind: 'ok'; payload: JudgmentResponse }
  | { kind: 'stale'; currentNode?: string };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

function errorCode(body: unknown): { code: string; message: string } {
  const err = (body as ErrorBody | null)?.error;
  if (err && typeof err.code === 'string') {
    return { code: err.code, message: err.message ?? err.code };
  }
  return { code: 'unknown_error', message: JSON.stringify(body) };
}

export interface ApiClientOptions {
  maxAttempts?: number;
  retryDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

export class ApiClient {
  private readonly maxAttempts: number;
  private readonly retryDelayMs: number;
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(
    private readonly baseUrl: string,
    private readonly campaignId: string,
    private readonly token: string,
    private readonly transport: Transport,
    options: ApiClientOptions = {},
  ) {
    this.maxAttempts = options.maxAttempts ?? 4;
    this.retryDelayMs = options.retryDelayMs ?? 500;
    this.sleep = options.sleep ?? ((ms) => new Promise((resolve) => setTimeout(resolve, ms)));
  }

  private headers(extra: Record<string, string> = {}): Record<string, string> {
    return { Authorization: `Bearer ${this.token}`, ...extra };
  }

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}/campaigns/${encodeURIComponent(this.campaignId)}${path}`;
  }

  /** GET with transparent retry on transport failure. */
  private async get(path: string): Promise<HttpResponse> {
    let lastError: unknown;
    for (let attempt = 0; attempt < this.maxAttempts; attempt += 1) {
      try {
        return await this.transport(this.url(path), { method: 'GET', headers: this.headers() });
      } catch (error) {
        lastError = error;
        await this.sleep(this.retryDelayMs);
      }
    }
    throw lastError;
  }

  async nextTask(): Promise<NextPayload> {
    const response = await this.get('/next');
    if (response.status !== 200) {
      const { code, message } = errorCode(response.body);
      throw new ApiError(response.status, code, message);
    }
    return response.body as NextPayload;
  }

  /**
   * POST one judgment. The body (including idempotency_key and
   * elapsed_seconds) is serialized once and resent verbatim on network
   * failure.
   */
  async postJudgment(body: JudgmentBody): Promise<SubmitResult> {
    const serialized = JSON.stringify(body);
    let lastError: unknown;
    for (let attempt = 0; attempt < this.maxAttempts; attempt += 1) {
      let response: HttpResponse;
      try {
        response = await this.transport(this.url('/judgments'), {
          method: 'POST',
          headers: this.headers({ 'Content-Type': 'application/json' }),
          body: serialized,
        });
      } catch (error) {
        lastError = error;
        await this.sleep(this.retryDelayMs);
        continue;
      }
      if (response.status === 200) {
        return { kind: 'ok', payload: response.body as JudgmentResponse };
      }
      const { code, message } = errorCode(response.body);
      if (response.status === 409) {
        const current = (response.body as { error?: { current_node?: string } }).error?.current_node;
        return { kind: 'stale', currentNode: current };
      }
      throw new ApiError(response.status, code, message);
    }
    throw lastError;
  }
}

/** Transport over the browser fetch API. */
export function fetchTransport(fetchFn: typeof fetch = fetch): Transport {
  return async (url, init) => {
    const response = await fetchFn(url, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    return { status: response.status, body };
  };
}
