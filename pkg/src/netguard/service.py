"""HTTP annotation service: serves the selection queue of a parked run.

A parked run directory (written by the pipeline in service mode) is loaded
into an in-memory task store. Label submissions are serialized per task,
journaled as append-only JSON lines for crash recovery, and once the last
pending task is labeled the run resumes automatically through the same
adaptation path the simulated oracle uses.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import ClassifierModel
from .dataset import FeatureSchema, encode_features, load_csv, normalize
from .errors import NetguardError
from .pipeline import RunConfig, resume_run
from .selection import SelectionReport

logger = logging.getLogger(__name__)


class TaskNotFound(NetguardError):
    pass


class RunNotFound(NetguardError):
    pass


class LabelConflict(NetguardError):
    pass


class InvalidLabel(NetguardError):
    pass


@dataclass
class AnnotationTask:
    """One selected sample awaiting (or holding) an analyst label."""

    task_id: str
    run_id: str
    sample_index: int
    features: dict
    normalized_continuous: dict
    score: float
    predicted_label: str
    predicted_proba: dict[str, float]
    status: str = "pending"  # pending | labeled
    submitted_label: str | None = None
    note: str | None = None
    created_at: float = 0.0
    labeled_at: float | None = None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "run_id": self.run_id,
            "sample_index": self.sample_index,
            "features": self.features,
            "normalized_continuous": self.normalized_continuous,
            "score": self.score,
            "predicted_label": self.predicted_label,
            "predicted_proba": self.predicted_proba,
            "status": self.status,
            "submitted_label": self.submitted_label,
            "note": self.note,
            "created_at": self.created_at,
            "labeled_at": self.labeled_at,
        }


@dataclass
class RunEntry:
    run_id: str
    run_dir: Path
    class_vocab: list[str]
    tasks: dict[str, AnnotationTask] = field(default_factory=dict)
    ordered_ids: list[str] = field(default_factory=list)  # descending score
    pending: int = 0
    state: str = "awaiting-labels"  # awaiting-labels | resuming | completed | failed
    error: str | None = None


class AnnotationStore:
    """Task queue with journaled, serialized label transitions.

    `resume_async=False` runs the resumption inline in the submitting request,
    which tests use for determinism; the CLI serves with a background thread.
    """

    def __init__(
        self,
        journal_dir: str | Path | None = None,
        allow_relabel: bool = False,
        resume_async: bool = True,
        resume_fn=resume_run,
    ):
        self.journal_dir = Path(journal_dir) if journal_dir is not None else None
        if self.journal_dir is not None:
            self.journal_dir.mkdir(parents=True, exist_ok=True)
        self.allow_relabel = allow_relabel
        self.resume_async = resume_async
        self.resume_fn = resume_fn
        self._runs: dict[str, RunEntry] = {}
        self._tasks: dict[str, AnnotationTask] = {}
        self._lock = threading.Lock()

    # -- loading ------------------------------------------------------------

    def register_run(self, run_dir: str | Path) -> str:
        """Load a parked run, enqueue its selection, and replay any journal."""
        run_dir = Path(run_dir)
        with open(run_dir / "state.json", encoding="utf-8") as fh:
            state = json.load(fh)
        run_id = state["run_id"]
        if run_id in self._runs:
            return run_id  # idempotent

        config = RunConfig.load(run_dir / "config.json")
        schema = FeatureSchema.load(config.csv["schema"])
        selection = SelectionReport.load(run_dir / "selection.json")
        model = ClassifierModel.load(run_dir / "model_pre.json")
        x_l = load_csv(config.csv["x_l"], schema, "labeled")
        mode = "unlabeled-with-hidden-truth" if config.csv.get("x_ul_truth") else "unlabeled"
        x_ul = load_csv(config.csv["x_ul"], schema, mode)
        _, (x_ul_n,), _ = normalize(x_l, [x_ul])
        x_ul_enc = encode_features(x_ul_n)

        entry = RunEntry(run_id=run_id, run_dir=run_dir, class_vocab=list(schema.classes))
        order = selection.selected[
            np.lexsort((selection.selected, -selection.scores[selection.selected]))
        ]
        probs = model.predict_proba(x_ul_enc[order])
        cont_names = [f.name for f in schema.continuous_features]
        now = time.time()
        for row, idx in enumerate(order):
            idx = int(idx)
            task_id = f"{run_id}-{idx}"
            task = AnnotationTask(
                task_id=task_id,
                run_id=run_id,
                sample_index=idx,
                features=x_ul.record(idx).feature_map(schema),
                normalized_continuous={
                    name: float(v) for name, v in zip(cont_names, x_ul_n.continuous[idx])
                },
                score=float(selection.scores[idx]),
                predicted_label=model.classes[int(np.argmax(probs[row]))],
                predicted_proba={
                    c: float(p) for c, p in zip(model.classes, probs[row])
                },
                created_at=now,
            )
            entry.tasks[task_id] = task
            entry.ordered_ids.append(task_id)
            self._tasks[task_id] = task
        entry.pending = len(entry.tasks)
        if state.get("status") == "completed":
            entry.state = "completed"
        self._runs[run_id] = entry
        self._replay_journal(entry)
        logger.info("registered run %s with %d tasks (%d pending)", run_id, len(entry.tasks), entry.pending)
        return run_id

    def _journal_path(self, run_id: str) -> Path | None:
        if self.journal_dir is None:
            return None
        return self.journal_dir / f"{run_id}.jsonl"

    def _append_journal(self, run_id: str, event: dict) -> None:
        path = self._journal_path(run_id)
        if path is None:
            return
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()

    def _replay_journal(self, entry: RunEntry) -> None:
        path = self._journal_path(entry.run_id)
        if path is None or not path.exists():
            return
        replayed = 0
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                if event.get("event") != "label":
                    continue
                task = entry.tasks.get(event["task_id"])
                if task is None or task.status == "labeled":
                    continue
                task.status = "labeled"
                task.submitted_label = event["label"]
                task.note = event.get("note")
                task.labeled_at = event.get("ts")
                entry.pending -= 1
                replayed += 1
        if replayed:
            logger.info("replayed %d label events for run %s", replayed, entry.run_id)
        if entry.pending == 0 and entry.state == "awaiting-labels":
            self._start_resume(entry)

    # -- queue operations ----------------------------------------------------

    def enqueue_count(self, run_id: str) -> int:
        return len(self._entry(run_id).tasks)

    def _entry(self, run_id: str) -> RunEntry:
        if run_id not in self._runs:
            raise RunNotFound(f"unknown run {run_id!r}")
        return self._runs[run_id]

    def get_task(self, task_id: str) -> AnnotationTask:
        if task_id not in self._tasks:
            raise TaskNotFound(f"unknown task {task_id!r}")
        return self._tasks[task_id]

    def list_tasks(
        self,
        run_id: str,
        status: str | None = None,
        page: int = 0,
        page_size: int = 50,
    ) -> dict:
        entry = self._entry(run_id)
        rows = [entry.tasks[t] for t in entry.ordered_ids]
        if status is not None:
            rows = [t for t in rows if t.status == status]
        start = page * page_size
        return {
            "run_id": run_id,
            "total": len(rows),
            "page": page,
            "page_size": page_size,
            "tasks": [t.to_json() for t in rows[start : start + page_size]],
        }

    def submit_label(
        self,
        task_id: str,
        label: str,
        note: str | None = None,
        allow_relabel: bool | None = None,
    ) -> AnnotationTask:
        """Label a pending task; at most one concurrent submission wins."""
        allow = self.allow_relabel if allow_relabel is None else allow_relabel
        resume_entry = None
        with self._lock:
            task = self.get_task(task_id)
            entry = self._entry(task.run_id)
            if label not in entry.class_vocab:
                raise InvalidLabel(f"label {label!r} not in the run's class vocabulary")
            if task.status == "labeled" and not allow:
                raise LabelConflict(f"task {task_id!r} is already labeled")
            was_pending = task.status == "pending"
            task.status = "labeled"
            task.submitted_label = label
            task.note = note
            task.labeled_at = time.time()
            self._append_journal(
                task.run_id,
                {"event": "label", "task_id": task_id, "label": label, "note": note, "ts": task.labeled_at},
            )
            if was_pending:
                entry.pending -= 1
            if entry.pending == 0 and entry.state == "awaiting-labels":
                entry.state = "resuming"
                resume_entry = entry
        if resume_entry is not None:
            self._launch_resume(resume_entry)
        return task

    # -- resumption ----------------------------------------------------------

    def _start_resume(self, entry: RunEntry) -> None:
        if entry.state == "awaiting-labels":
            entry.state = "resuming"
            self._launch_resume(entry)

    def _launch_resume(self, entry: RunEntry) -> None:
        if self.resume_async:
            thread = threading.Thread(target=self._resume, args=(entry,), daemon=True)
            thread.start()
        else:
            self._resume(entry)

    def _resume(self, entry: RunEntry) -> None:
        labels = {
            task.sample_index: task.submitted_label for task in entry.tasks.values()
        }
        try:
            self.resume_fn(entry.run_dir, labels)
            entry.state = "completed"
            logger.info("run %s resumed and completed", entry.run_id)
        except Exception as exc:  # pragma: no cover - surfaced via status endpoint
            entry.state = "failed"
            entry.error = str(exc)
            logger.exception("resume failed for run %s", entry.run_id)

    # -- status / results ----------------------------------------------------

    def run_status(self, run_id: str) -> dict:
        entry = self._entry(run_id)
        labeled = len(entry.tasks) - entry.pending
        return {
            "run_id": run_id,
            "status": entry.state,
            "pending": entry.pending,
            "labeled": labeled,
            "total": len(entry.tasks),
            "class_vocab": entry.class_vocab,
            "error": entry.error,
        }

    def run_metrics(self, run_id: str) -> dict | None:
        entry = self._entry(run_id)
        path = entry.run_dir / "metrics_post.json"
        if entry.state != "completed" or not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------


try:
    from pydantic import BaseModel as _BaseModel
except ImportError:  # pragma: no cover - fastapi always brings pydantic
    _BaseModel = object


class LabelSubmission(_BaseModel):
    label: str
    note: str | None = None


def create_app(store: AnnotationStore, console_dir: str | Path | None = None):
    from fastapi import FastAPI, HTTPException
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="netguard annotation service")

    @app.get("/runs/{run_id}/tasks")
    def list_tasks(run_id: str, status: str | None = None, page: int = 0, page_size: int = 50):
        try:
            return store.list_tasks(run_id, status=status, page=page, page_size=page_size)
        except RunNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        try:
            return store.get_task(task_id).to_json()
        except TaskNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/tasks/{task_id}/label")
    def submit_label(task_id: str, body: LabelSubmission):
        try:
            return store.submit_label(task_id, body.label, body.note).to_json()
        except TaskNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except InvalidLabel as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except LabelConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.get("/runs/{run_id}/status")
    def run_status(run_id: str):
        try:
            return store.run_status(run_id)
        except RunNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/runs/{run_id}/metrics")
    def run_metrics(run_id: str):
        try:
            metrics = store.run_metrics(run_id)
        except RunNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if metrics is None:
            raise HTTPException(status_code=409, detail="run not completed")
        return metrics

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(console_dir), html=True), name="console")
    return app


def serve(
    run_dirs: list[str | Path],
    host: str = "127.0.0.1",
    port: int = 8787,
    journal_dir: str | Path | None = None,
    console_dir: str | Path | None = None,
    allow_relabel: bool = False,
) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    store = AnnotationStore(journal_dir=journal_dir, allow_relabel=allow_relabel)
    for run_dir in run_dirs:
        store.register_run(run_dir)
    app = create_app(store, console_dir=console_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
