/**
 * HTTP client for the environment service.
 *
 * All rewards and advantages come back from the service verbatim; this
 * client does no numeric post-processing, so the service stays the single
 * source of truth for every number a trainer sees.
 */

import type {
  GroupScoreOptions,
  GroupScoreResult,
  InstanceView,
  RewardBreakdown,
  SampleFilters,
  SampleResult,
  ServiceStats,
} from './types.js';

export interface ClientConfig {
  baseUrl: string;
  /** Per-request timeout in milliseconds. Must be > 0. */
  timeoutMs?: number;
  /** Extra attempts after a network-level failure. Must be >= 0. */
  retries?: number;
  /** Optional tag recorded with every episode the service logs. */
  clientTag?: string;
}

/** The service answered with a non-2xx status. Not retried. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail?: string;

  constructor(status: number, message: string, detail?: string) {
    super(`HTTP ${status}: ${message}`);
    this.name = 'ApiError';
    this.status = status;
    this.detail = detail;
  }
}

/** The request never produced an HTTP response, even after retries. */
export class NetworkError extends Error {
  constructor(message: string, cause?: unknown) {
    super(message);
    this.name = 'NetworkError';
    if (cause !== undefined) {
      (this as { cause?: unknown }).cause = cause;
    }
  }
}

/** The caller misused the client (bad config, bad arguments, bad handle). */
export class UsageError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'UsageError';
  }
}

const DEFAULT_TIMEOUT_MS = 30_000;

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class SieClient {
  readonly baseUrl: string;
  readonly timeoutMs: number;
  readonly retries: number;
  readonly clientTag?: string;

  constructor(config: ClientConfig) {
    if (!config.baseUrl) {
      throw new UsageError('baseUrl is required');
    }
    const timeoutMs = config.timeoutMs ?? DEFAULT_TIMEOUT_MS;
    if (!(timeoutMs > 0)) {
      throw new UsageError(`timeoutMs must be > 0, got ${timeoutMs}`);
    }
    const retries = config.retries ?? 0;
    if (!Number.isInteger(retries) || retries < 0) {
      throw new UsageError(`retries must be a non-negative integer, got ${retries}`);
    }
    this.baseUrl = config.baseUrl.replace(/\/+$/, '');
    this.timeoutMs = timeoutMs;
    this.retries = retries;
    this.clientTag = config.clientTag;
  }

  async healthz(): Promise<{ status: string; datasets: number }> {
    return this.request('GET', '/healthz');
  }

  async instance(instanceId: string): Promise<InstanceView> {
    return this.request('GET', `/instances/${encodeURIComponent(instanceId)}`);
  }

  async sample(filters: SampleFilters = {}): Promise<SampleResult> {
    const body: Record<string, unknown> = {};
    if (filters.ratio !== undefined) body.ratio = filters.ratio;
    if (filters.seed !== undefined) body.seed = filters.seed;
    return this.request('POST', '/sample', body);
  }

  async score(instanceId: string, response: string): Promise<RewardBreakdown> {
    const body: Record<string, unknown> = {
      instance_id: instanceId,
      response,
    };
    if (this.clientTag !== undefined) body.client_tag = this.clientTag;
    return this.request('POST', '/score', body);
  }

  async scoreGroup(
    instanceId: string,
    responses: string[],
    options: GroupScoreOptions = {},
  ): Promise<GroupScoreResult> {
    if (responses.length === 0) {
      throw new UsageError('responses must be non-empty');
    }
    const body: Record<string, unknown> = {
      instance_id: instanceId,
      responses,
    };
    if (options.ratiosNewOverOld !== undefined) {
      body.ratios_new_over_old = options.ratiosNewOverOld;
    }
    if (options.ratiosRefOverNew !== undefined) {
      body.ratios_ref_over_new = options.ratiosRefOverNew;
    }
    if (options.clipEpsilon !== undefined) body.clip_epsilon = options.clipEpsilon;
    if (options.klCoeff !== undefined) body.kl_coeff = options.klCoeff;
    if (options.stdFloor !== undefined) body.std_floor = options.stdFloor;
    if (this.clientTag !== undefined) body.client_tag = this.clientTag;
    return this.request('POST', '/score_group', body);
  }

  async stats(): Promise<ServiceStats> {
    return this.request('GET', '/stats');
  }

  /**
   * One HTTP exchange. Network-level failures (connection refused, reset,
   * timeout) are retried with exponential backoff up to `retries` extra
   * attempts; an HTTP error status is a deterministic answer from the
   * service and surfaces immediately as ApiError.
   */
  private async request<T>(
    method: 'GET' | 'POST',
    path: string,
    body?: Record<string, unknown>,
  ): Promise<T> {
    const url = this.baseUrl + path;
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { 'content-type': 'application/json' };
      init.body = JSON.stringify(body);
    }

    let lastFailure: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      if (attempt > 0) {
        await sleep(Math.min(50 * 2 ** (attempt - 1), 1000));
      }
      let response: Response;
      try {
        response = await fetch(url, {
          ...init,
          signal: AbortSignal.timeout(this.timeoutMs),
        });
      } catch (err) {
        lastFailure = err;
        continue;
      }
      if (!response.ok) {
        let message = response.statusText || 'request failed';
        let detail: string | undefined;
        try {
          const payload = (await response.json()) as {
            error?: string;
            detail?: string;
          };
          if (payload.error) message = payload.error;
          if (payload.detail) detail = payload.detail;
        } catch {
          // non-JSON error body; keep the status text
        }
        throw new ApiError(response.status, message, detail);
      }
      return (await response.json()) as T;
    }
    throw new NetworkError(
      `${method} ${url} unreachable after ${this.retries + 1} attempt(s)`,
      lastFailure,
    );
  }
}
