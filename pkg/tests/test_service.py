import json
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from netguard.dataset import generate_drift_benchmark
from netguard.pipeline import ParkedRun, run
from netguard.service import (
    AnnotationStore,
    InvalidLabel,
    LabelConflict,
    RunNotFound,
    TaskNotFound,
    create_app,
)

from test_pipeline import fast_config, mini_spec


@pytest.fixture
def parked(tmp_path):
    """A parked service-mode run plus its ground-truth labels by index."""
    run_dir = tmp_path / "parked"
    cfg = fast_config(budget=0.05, oracle_mode="service")
    with pytest.raises(ParkedRun):
        run(cfg, out_dir=run_dir)
    spec = mini_spec()
    _, x_ul = generate_drift_benchmark(spec)
    selection = json.loads((run_dir / "selection.json").read_text())
    truth = {
        int(i): spec.schema().classes[int(x_ul.hidden_labels[i])]
        for i in selection["selected"]
    }
    return run_dir, truth


class TestStore:
    def test_enqueue_counts_and_idempotency(self, parked, tmp_path):
        run_dir, truth = parked
        store = AnnotationStore(journal_dir=tmp_path / "journal", resume_async=False)
        run_id = store.register_run(run_dir)
        assert store.enqueue_count(run_id) == len(truth)
        assert store.register_run(run_dir) == run_id  # re-register: no new tasks
        assert store.enqueue_count(run_id) == len(truth)

    def test_tasks_sorted_by_descending_score(self, parked, tmp_path):
        run_dir, _ = parked
        store = AnnotationStore(journal_dir=tmp_path / "journal", resume_async=False)
        run_id = store.register_run(run_dir)
        page = store.list_tasks(run_id, page_size=1000)
        scores = [t["score"] for t in page["tasks"]]
        assert scores == sorted(scores, reverse=True)

    def test_task_feature_snapshot_round_trips(self, parked, tmp_path):
        run_dir, _ = parked
        store = AnnotationStore(resume_async=False)
        run_id = store.register_run(run_dir)
        task = store.list_tasks(run_id, page_size=1)["tasks"][0]
        spec = mini_spec()
        _, x_ul = generate_drift_benchmark(spec)
        record = x_ul.record(task["sample_index"]).feature_map(spec.schema())
        assert task["features"] == record

    def test_label_flow_and_conservation(self, parked, tmp_path):
        run_dir, truth = parked
        store = AnnotationStore(journal_dir=tmp_path / "journal", resume_async=False)
        run_id = store.register_run(run_dir)
        total = store.enqueue_count(run_id)
        for i, (idx, label) in enumerate(truth.items()):
            status = store.run_status(run_id)
            assert status["pending"] + status["labeled"] == total
            store.submit_label(f"{run_id}-{idx}", label)
        status = store.run_status(run_id)
        assert status["pending"] == 0
        assert status["status"] == "completed"  # inline resume ran
        assert (run_dir / "metrics_post.json").exists()

    def test_invalid_label_rejected_task_unchanged(self, parked):
        run_dir, truth = parked
        store = AnnotationStore(resume_async=False)
        run_id = store.register_run(run_dir)
        task_id = f"{run_id}-{next(iter(truth))}"
        with pytest.raises(InvalidLabel):
            store.submit_label(task_id, "martian")
        assert store.get_task(task_id).status == "pending"

    def test_relabel_conflict_and_override(self, parked):
        run_dir, truth = parked
        store = AnnotationStore(resume_async=False)
        run_id = store.register_run(run_dir)
        items = iter(truth.items())
        idx, label = next(items)
        task_id = f"{run_id}-{idx}"
        store.submit_label(task_id, label)
        with pytest.raises(LabelConflict):
            store.submit_label(task_id, label)
        updated = store.submit_label(task_id, "benign", allow_relabel=True)
        assert updated.submitted_label == "benign"

    def test_unknown_ids(self, parked):
        run_dir, _ = parked
        store = AnnotationStore(resume_async=False)
        store.register_run(run_dir)
        with pytest.raises(TaskNotFound):
            store.get_task("nope")
        with pytest.raises(RunNotFound):
            store.run_status("nope")

    def test_concurrent_duplicate_submissions_one_winner(self, parked):
        run_dir, truth = parked
        store = AnnotationStore(resume_async=False)
        run_id = store.register_run(run_dir)
        idx, label = next(iter(truth.items()))
        task_id = f"{run_id}-{idx}"
        outcomes = []
        barrier = threading.Barrier(2)

        def submit():
            barrier.wait()
            try:
                store.submit_label(task_id, label)
                outcomes.append("ok")
            except LabelConflict:
                outcomes.append("conflict")

        threads = [threading.Thread(target=submit) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(outcomes) == ["conflict", "ok"]

    def test_journal_replay_recovers_and_resumes(self, parked, tmp_path):
        run_dir, truth = parked
        journal = tmp_path / "journal"
        store1 = AnnotationStore(journal_dir=journal, resume_async=False)
        run_id = store1.register_run(run_dir)
        items = list(truth.items())
        half = len(items) // 2
        for idx, label in items[:half]:
            store1.submit_label(f"{run_id}-{idx}", label)
        del store1  # crash

        store2 = AnnotationStore(journal_dir=journal, resume_async=False)
        run_id2 = store2.register_run(run_dir)
        status = store2.run_status(run_id2)
        assert status["labeled"] == half
        for idx, label in items[half:]:
            store2.submit_label(f"{run_id2}-{idx}", label)
        assert store2.run_status(run_id2)["status"] == "completed"

    def test_oracle_equivalence_bit_for_bit(self, tmp_path):
        """Service-labeled adaptation with ground-truth values must reproduce
        the simulated-oracle run's post model checkpoint exactly."""
        sim_dir = tmp_path / "sim"
        sim_result = run(fast_config(budget=0.05), out_dir=sim_dir)

        svc_dir = tmp_path / "svc"
        with pytest.raises(ParkedRun):
            run(fast_config(budget=0.05, oracle_mode="service"), out_dir=svc_dir)
        store = AnnotationStore(resume_async=False)
        run_id = store.register_run(svc_dir)
        spec = mini_spec()
        _, x_ul = generate_drift_benchmark(spec)
        for task in store.list_tasks(run_id, page_size=1000)["tasks"]:
            label = spec.schema().classes[int(x_ul.hidden_labels[task["sample_index"]])]
            store.submit_label(task["task_id"], label)
        assert store.run_status(run_id)["status"] == "completed"
        assert (svc_dir / "model_post.json").read_bytes() == (
            sim_dir / "model_post.json"
        ).read_bytes()
        assert json.loads((svc_dir / "metrics_post.json").read_text()) == (
            sim_result.post_metrics.to_json()
        )


class TestHttpApi:
    @pytest.fixture
    def client(self, parked):
        run_dir, truth = parked
        store = AnnotationStore(resume_async=False)
        run_id = store.register_run(run_dir)
        app = create_app(store)
        return TestClient(app), run_id, truth

    def test_list_pending_tasks_paginated(self, client):
        http, run_id, truth = client
        r = http.get(f"/runs/{run_id}/tasks", params={"status": "pending", "page_size": 5})
        assert r.status_code == 200
        body = r.json()
        assert body["total"] == len(truth)
        assert len(body["tasks"]) == 5
        scores = [t["score"] for t in body["tasks"]]
        assert scores == sorted(scores, reverse=True)

    def test_get_task_and_submit_label(self, client):
        http, run_id, truth = client
        idx, label = next(iter(truth.items()))
        task_id = f"{run_id}-{idx}"
        assert http.get(f"/tasks/{task_id}").json()["status"] == "pending"
        r = http.post(f"/tasks/{task_id}/label", json={"label": label, "note": "checked"})
        assert r.status_code == 200
        assert r.json()["status"] == "labeled"
        assert http.get(f"/tasks/{task_id}").json()["note"] == "checked"

    def test_error_codes(self, client):
        http, run_id, truth = client
        idx, label = next(iter(truth.items()))
        task_id = f"{run_id}-{idx}"
        assert http.get("/tasks/ghost").status_code == 404
        assert http.get("/runs/ghost/status").status_code == 404
        assert http.post(f"/tasks/{task_id}/label", json={"label": "martian"}).status_code == 400
        http.post(f"/tasks/{task_id}/label", json={"label": label})
        assert http.post(f"/tasks/{task_id}/label", json={"label": label}).status_code == 409

    def test_metrics_gated_until_completed(self, client):
        http, run_id, truth = client
        assert http.get(f"/runs/{run_id}/metrics").status_code == 409
        for idx, label in truth.items():
            http.post(f"/tasks/{run_id}-{idx}/label", json={"label": label})
        status = http.get(f"/runs/{run_id}/status").json()
        assert status["status"] == "completed"
        metrics = http.get(f"/runs/{run_id}/metrics")
        assert metrics.status_code == 200
        assert "macro_f1" in metrics.json()
