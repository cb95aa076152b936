import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { QueueController, outOfRangeFeatures } from "../src/queue";
import type { AnnotationTask, RunStatus } from "../src/types";

function makeTask(idx: number, score: number): AnnotationTask {
  return {
    task_id: `run-e2e-${idx}`,
    run_id: "run-e2e",
    sample_index: idx,
    features: { pkt_size: 0.5 + idx, proto: "tcp" },
    normalized_continuous: { pkt_size: 0.5 },
    score,
    predicted_label: "benign",
    predicted_proba: { benign: 0.7, dos: 0.3 },
    status: "pending",
    submitted_label: null,
    note: null,
  };
}

/** In-memory fake of the annotation service backing global fetch. */
class FakeService {
  tasks: AnnotationTask[];
  state: RunStatus;
  posts: Array<{ taskId: string; label: string }> = [];
  conflictOnce: string | null = null;
  down = false;

  constructor(n: number) {
    this.tasks = Array.from({ length: n }, (_, i) => makeTask(i, n - i));
    this.state = {
      run_id: "run-e2e",
      status: "awaiting-labels",
      pending: n,
      labeled: 0,
      total: n,
      class_vocab: ["benign", "dos", "novel"],
      error: null,
    };
  }

  install(): void {
    globalThis.fetch = vi.fn(async (url: any, init?: any) => {
      if (this.down) throw new TypeError("fetch failed");
      const u = String(url);
      const json = (body: unknown, status = 200) =>
        new Response(JSON.stringify(body), { status });
      if (u.includes("/status")) return json(this.state);
      if (u.includes("/metrics")) {
        if (this.state.status !== "completed") return json({ detail: "not done" }, 409);
        return json({
          macro_f1: 0.9,
          micro_f1: 0.91,
          accuracy: 0.91,
          per_class_f1: { benign: 0.95, dos: 0.88 },
          fnr: 0.05,
          fpr: 0.02,
          classes: ["benign", "dos", "novel"],
          n: 100,
        });
      }
      if (u.includes("/label")) {
        const taskId = decodeURIComponent(u.split("/tasks/")[1].split("/label")[0]);
        if (this.conflictOnce === taskId) {
          this.conflictOnce = null;
          return json({ detail: "already labeled" }, 409);
        }
        const { label } = JSON.parse(init.body);
        this.posts.push({ taskId, label });
        const task = this.tasks.find((t) => t.task_id === taskId)!;
        if (task.status === "pending") {
          task.status = "labeled";
          this.state.pending -= 1;
          this.state.labeled += 1;
          if (this.state.pending === 0) this.state.status = "completed";
        }
        return json(task);
      }
      if (u.includes("/tasks")) {
        const pending = this.tasks.filter((t) => t.status === "pending");
        return json({
          run_id: "run-e2e",
          total: pending.length,
          page: 0,
          page_size: 50,
          tasks: pending,
        });
      }
      return json({ detail: "not found" }, 404);
    }) as any;
  }
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe("outOfRangeFeatures", () => {
  it("flags values escaping the source [0,1] range", () => {
    expect(outOfRangeFeatures({ a: 0.5, b: -0.1, c: 1.4, d: 1.0 })).toEqual(["b", "c"]);
  });
});

describe("QueueController", () => {
  it("lists pending tasks highest informativeness first", async () => {
    const svc = new FakeService(5);
    svc.install();
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    const scores = ctl.state.queue.map((v) => v.task.score);
    expect(scores).toEqual([...scores].sort((a, b) => b - a));
    expect(ctl.state.phase).toBe("labeling");
    expect(ctl.state.current?.task.sample_index).toBe(0);
  });

  it("labels, decrements pending without reload, and advances", async () => {
    const svc = new FakeService(3);
    svc.install();
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    const fetchCallsAfterRefresh = (globalThis.fetch as any).mock.calls.length;
    const before = ctl.pendingCount();
    await ctl.labelCurrent("dos");
    expect(ctl.pendingCount()).toBe(before - 1);
    expect(ctl.state.current?.task.sample_index).toBe(1);
    // one POST, no list re-fetch
    const calls = (globalThis.fetch as any).mock.calls.slice(fetchCallsAfterRefresh);
    expect(calls.length).toBe(1);
    expect(String(calls[0][0])).toContain("/label");
  });

  it("completes the queue, resumes, and shows metrics", async () => {
    const svc = new FakeService(3);
    svc.install();
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    await ctl.labelCurrent("benign");
    await ctl.labelCurrent("dos");
    await ctl.labelCurrent("novel");
    expect(svc.posts.length).toBe(3);
    expect(ctl.state.phase).toBe("completed");
    expect(ctl.state.metrics?.macro_f1).toBeCloseTo(0.9);
  });

  it("metrics stay hidden until the run completes", async () => {
    const svc = new FakeService(2);
    svc.install();
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    expect(ctl.state.metrics).toBeNull();
    await ctl.labelCurrent("benign");
    expect(ctl.state.metrics).toBeNull();
    await ctl.labelCurrent("benign");
    expect(ctl.state.metrics).not.toBeNull();
  });

  it("skips to the next task on a label conflict", async () => {
    const svc = new FakeService(3);
    svc.install();
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    const firstId = ctl.state.current!.task.task_id;
    // Another console labels the same task first.
    svc.conflictOnce = firstId;
    svc.tasks[0].status = "labeled";
    svc.state.pending -= 1;
    svc.state.labeled += 1;
    await ctl.labelCurrent("dos");
    expect(svc.posts.length).toBe(0); // conflicting POST not counted as ours
    expect(ctl.state.labeledByMe).toBe(0);
    expect(ctl.state.current?.task.task_id).not.toBe(firstId);
  });

  it("shows a retrying banner when the service is down", async () => {
    const svc = new FakeService(2);
    svc.install();
    svc.down = true;
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    expect(ctl.state.phase).toBe("retrying");
    svc.down = false;
    await ctl.refresh();
    expect(ctl.state.phase).toBe("labeling");
  });

  it("rejects labels outside the run vocabulary by construction", async () => {
    const svc = new FakeService(2);
    svc.install();
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    await expect(ctl.labelCurrent("martian")).rejects.toThrow(/vocabulary/);
    expect(svc.posts.length).toBe(0);
  });

  it("shows the empty state for a run with no pending work", async () => {
    const svc = new FakeService(1);
    svc.tasks[0].status = "labeled";
    svc.state.pending = 0;
    svc.state.labeled = 1;
    svc.install();
    const ctl = new QueueController(new ApiClient(""), "run-e2e", 50, 1);
    await ctl.refresh();
    expect(ctl.state.phase).toBe("empty");
  });
});
