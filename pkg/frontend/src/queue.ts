import { ApiClient, ConflictError, ServiceUnreachable } from "./api";
import type { MetricsReport, RunStatus, TaskView } from "./types";

export type Phase =
  | "loading"
  | "labeling"
  | "empty"
  | "retrying"
  | "resuming"
  | "completed"
  | "failed";

export interface QueueState {
  phase: Phase;
  runStatus: RunStatus | null;
  queue: TaskView[];
  current: TaskView | null;
  labeledByMe: number;
  metrics: MetricsReport | null;
  lastError: string | null;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export function outOfRangeFeatures(normalized: Record<string, number>): string[] {
  return Object.entries(normalized)
    .filter(([, v]) => v < 0 || v > 1)
    .map(([name]) => name);
}

/** Drives one labeling session: fetch pending tasks (highest informativeness
 * first), submit labels on explicit user action, advance, and surface the
 * post-adaptation metrics once the run has resumed and completed. */
export class QueueController {
  readonly state: QueueState = {
    phase: "loading",
    runStatus: null,
    queue: [],
    current: null,
    labeledByMe: 0,
    metrics: null,
    lastError: null,
  };

  private listeners: Array<(s: QueueState) => void> = [];

  constructor(
    private readonly api: ApiClient,
    readonly runId: string,
    private readonly pageSize = 25,
    private readonly pollMs = 500,
    private readonly pollLimit = 600,
  ) {}

  onChange(listener: (s: QueueState) => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  classVocab(): string[] {
    return this.state.runStatus?.class_vocab ?? [];
  }

  pendingCount(): number {
    return this.state.runStatus?.pending ?? 0;
  }

  async refresh(): Promise<void> {
    try {
      const status = await this.api.runStatus(this.runId);
      this.state.runStatus = status;
      this.state.lastError = null;
      if (status.status === "completed") {
        await this.finish();
        return;
      }
      if (status.status === "resuming") {
        this.state.phase = "resuming";
        this.notify();
        await this.awaitCompletion();
        return;
      }
      const page = await this.api.listTasks(this.runId, {
        status: "pending",
        page: 0,
        pageSize: this.pageSize,
      });
      this.state.queue = page.tasks.map((task, i) => ({
        task,
        rank: i,
        outOfRange: outOfRangeFeatures(task.normalized_continuous),
      }));
      this.state.current = this.state.queue[0] ?? null;
      this.state.phase = this.state.current ? "labeling" : "empty";
      this.notify();
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.state.phase = "retrying";
        this.state.lastError = String(err);
        this.notify();
        return;
      }
      throw err;
    }
  }

  /** Submit a label for the task on screen; every call corresponds to one
   * explicit user action. Conflicts (labeled elsewhere) refresh and skip. */
  async labelCurrent(label: string, note?: string): Promise<void> {
    const view = this.state.current;
    if (!view) return;
    if (!this.classVocab().includes(label)) {
      throw new Error(`label ${label} is not in the run's class vocabulary`);
    }
    try {
      await this.api.submitLabel(view.task.task_id, label, note);
      this.state.labeledByMe += 1;
      if (this.state.runStatus) this.state.runStatus.pending -= 1;
    } catch (err) {
      if (err instanceof ConflictError) {
        await this.refresh();
        return;
      }
      if (err instanceof ServiceUnreachable) {
        this.state.phase = "retrying";
        this.state.lastError = String(err);
        this.notify();
        return;
      }
      throw err;
    }
    this.advance();
    if (this.state.current === null) {
      await this.refreshOrFinish();
    } else {
      this.notify();
    }
  }

  private advance(): void {
    this.state.queue = this.state.queue.filter(
      (v) => v.task.task_id !== this.state.current?.task.task_id,
    );
    this.state.current = this.state.queue[0] ?? null;
  }

  private async refreshOrFinish(): Promise<void> {
    const status = await this.api.runStatus(this.runId);
    this.state.runStatus = status;
    if (status.pending > 0) {
      await this.refresh();
      return;
    }
    this.state.phase = "resuming";
    this.notify();
    await this.awaitCompletion();
  }

  private async awaitCompletion(): Promise<void> {
    for (let i = 0; i < this.pollLimit; i++) {
      const status = await this.api.runStatus(this.runId);
      this.state.runStatus = status;
      if (status.status === "completed") {
        await this.finish();
        return;
      }
      if (status.status === "failed") {
        this.state.phase = "failed";
        this.state.lastError = status.error;
        this.notify();
        return;
      }
      await sleep(this.pollMs);
    }
    this.state.phase = "failed";
    this.state.lastError = "timed out waiting for the run to resume";
    this.notify();
  }

  private async finish(): Promise<void> {
    this.state.metrics = await this.api.runMetrics(this.runId);
    this.state.phase = "completed";
    this.state.current = null;
    this.notify();
  }
}
