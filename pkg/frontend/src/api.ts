import type { AnnotationTask, MetricsReport, RunStatus, TaskPage } from "./types";

export class ConflictError extends Error {}
export class NotFoundError extends Error {}
export class ServiceUnreachable extends Error {}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ServiceUnreachable(String(err));
  }
  if (response.status === 409) throw new ConflictError(await response.text());
  if (response.status === 404) throw new NotFoundError(await response.text());
  if (!response.ok) throw new Error(`${response.status}: ${await response.text()}`);
  return (await response.json()) as T;
}

/** Thin typed client over the annotation service HTTP API. */
export class ApiClient {
  constructor(private readonly base: string = "") {}

  listTasks(
    runId: string,
    opts: { status?: string; page?: number; pageSize?: number } = {},
  ): Promise<TaskPage> {
    const params = new URLSearchParams();
    if (opts.status) params.set("status", opts.status);
    if (opts.page !== undefined) params.set("page", String(opts.page));
    if (opts.pageSize !== undefined) params.set("page_size", String(opts.pageSize));
    const query = params.toString();
    return request<TaskPage>(
      `${this.base}/runs/${encodeURIComponent(runId)}/tasks${query ? "?" + query : ""}`,
    );
  }

  getTask(taskId: string): Promise<AnnotationTask> {
    return request<AnnotationTask>(`${this.base}/tasks/${encodeURIComponent(taskId)}`);
  }

  submitLabel(taskId: string, label: string, note?: string): Promise<AnnotationTask> {
    return request<AnnotationTask>(
      `${this.base}/tasks/${encodeURIComponent(taskId)}/label`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ label, note: note ?? null }),
      },
    );
  }

  runStatus(runId: string): Promise<RunStatus> {
    return request<RunStatus>(`${this.base}/runs/${encodeURIComponent(runId)}/status`);
  }

  /** null while the run has not completed yet (service answers 409). */
  async runMetrics(runId: string): Promise<MetricsReport | null> {
    try {
      return await request<MetricsReport>(
        `${this.base}/runs/${encodeURIComponent(runId)}/metrics`,
      );
    } catch (err) {
      if (err instanceof ConflictError) return null;
      throw err;
    }
  }
}
