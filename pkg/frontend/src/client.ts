import type { AnnotationRecord, AnnotationTask, StoredRecord } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

/** Thin client over the annotation endpoints.
 *
 * Submission retries transient failures with the original elapsed_ms
 * preserved; a 409 means the record already landed (an earlier attempt got
 * through), so it resolves as success.
 */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
    private readonly retries: number = 3,
    private readonly retryDelayMs: number = 200,
  ) {}

  async nextTask(workerId: string): Promise<AnnotationTask | null> {
    const res = await this.fetchFn(
      `${this.baseUrl}/task?worker_id=${encodeURIComponent(workerId)}`,
    );
    if (res.status === 404) {
      return null;
    }
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    return (await res.json()) as AnnotationTask;
  }

  async submit(record: AnnotationRecord): Promise<StoredRecord | null> {
    let lastError: unknown = null;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      if (attempt > 0) {
        await sleep(this.retryDelayMs * attempt);
      }
      let res: Response;
      try {
        res = await this.fetchFn(`${this.baseUrl}/response`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(record),
        });
      } catch (err) {
        lastError = err; // network failure: retry with the same payload
        continue;
      }
      if (res.status === 409) {
        return null; // already recorded: idempotent success
      }
      if (!res.ok) {
        throw new ApiError(res.status, await safeJson(res));
      }
      return (await res.json()) as StoredRecord;
    }
    throw lastError instanceof Error ? lastError : new Error(String(lastError));
  }

  async progress(): Promise<Record<string, unknown>> {
    const res = await this.fetchFn(`${this.baseUrl}/progress`);
    if (!res.ok) {
      throw new ApiError(res.status, await safeJson(res));
    }
    return (await res.json()) as Record<string, unknown>;
  }
}

async function safeJson(res: Response): Promise<unknown> {
  try {
    return await res.json();
  } catch {
    return await res.text();
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
