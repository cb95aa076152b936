export interface AnnotationTask {
  task_id: string;
  run_id: string;
  sample_index: number;
  features: Record<string, number | string>;
  normalized_continuous: Record<string, number>;
  score: number;
  predicted_label: string;
  predicted_proba: Record<string, number>;
  status: "pending" | "labeled";
  submitted_label: string | null;
  note: string | null;
}

export interface TaskPage {
  run_id: string;
  total: number;
  page: number;
  page_size: number;
  tasks: AnnotationTask[];
}

export interface RunStatus {
  run_id: string;
  status: "awaiting-labels" | "resuming" | "completed" | "failed";
  pending: number;
  labeled: number;
  total: number;
  class_vocab: string[];
  error: string | null;
}

export interface MetricsReport {
  macro_f1: number;
  micro_f1: number;
  accuracy: number;
  per_class_f1: Record<string, number>;
  fnr: number | null;
  fpr: number | null;
  classes: string[];
  n: number;
}

/** A task decorated for display: rank within the queue plus the features
 * whose normalized value escapes the source-domain [0, 1] range. */
export interface TaskView {
  task: AnnotationTask;
  rank: number;
  outOfRange: string[];
}
