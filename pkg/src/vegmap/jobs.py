"""Job execution for the HTTP service: one serial worker per project."""

from __future__ import annotations

import queue
import threading
import time
import traceback

from . import ops
from .features import import_embeddings
from .imaging import HueRangeSet
from .learners.base import model_from_json
from .learners.metrics import confusion
from .mapper import PredictionMap
from .project import Job, Project
from .tiling import TileManifest


def run_select(project: Project, params: dict) -> dict:
    image_id = params["image_id"]
    class_name = params["class_name"]
    img = project.get_image(image_id)
    mask = project.get_mask(image_id, class_name)
    if params.get("hue_ranges") is not None:
        ranges = HueRangeSet.parse(params["hue_ranges"])
    elif project.has_hue_ranges(class_name):
        ranges = project.get_hue_ranges(class_name)
    else:
        ranges = None
    manifest = ops.select_op(
        img,
        image_id,
        mask,
        class_name,
        size=int(params["size"]),
        sth=float(params["sth"]),
        shifts=int(params.get("shifts", 3)),
        hue_ranges=ranges,
        sat_min=float(params.get("sat_min", 0.05)),
        keep_undefined=bool(params.get("keep_undefined", False)),
    )
    inputs = {"image": image_id, "class": class_name}
    if ranges is not None:
        inputs["hue_ranges"] = ranges.to_text()
    aid = project.save_artifact("manifests", manifest.to_jsonl(), inputs, f"job:{params['job_id']}")
    return {"kind": "manifests", "id": aid, "tiles": len(manifest.entries)}


def run_embed(project: Project, params: dict) -> dict:
    manifest_id = params["manifest_id"]
    manifest = TileManifest.from_jsonl(project.artifact_text("manifests", manifest_id))
    images = {iid: project.get_image(iid) for iid in sorted({e.tile.image_id for e in manifest.entries})}
    matrix = ops.embed_op(images, manifest)
    aid = project.save_artifact(
        "features",
        matrix.to_csv(),
        {"manifest": manifest_id},
        f"job:{params['job_id']}",
        extra={"layout_id": matrix.layout_id},
    )
    return {"kind": "features", "id": aid, "rows": len(matrix)}


def load_features(project: Project, features_id: str):
    meta = project.artifact_meta("features", features_id)
    matrix = import_embeddings(
        project.root / "features" / f"{features_id}.csv", layout_id=meta.get("layout_id")
    )
    manifest_id = meta["inputs"].get("manifest")
    if manifest_id is None:
        raise KeyError(f"features {features_id!r} have no manifest provenance for labels")
    manifest = TileManifest.from_jsonl(project.artifact_text("manifests", manifest_id))
    return matrix, ops.labels_for(matrix, manifest), manifest_id


def run_train(project: Project, params: dict) -> dict:
    matrix, labels, manifest_id = load_features(project, params["features_id"])
    model = ops.train_op(
        matrix,
        labels,
        learner=params["learner"],
        hyperparameters=params.get("hyperparameters") or {},
        seed=int(params.get("seed", 0)),
    )
    aid = project.save_artifact(
        "models",
        model.to_json(),
        {"features": params["features_id"], "manifest": manifest_id},
        f"job:{params['job_id']}",
    )
    return {"kind": "models", "id": aid, "learner": model.kind}


def run_cv(project: Project, params: dict) -> dict:
    matrix, labels, manifest_id = load_features(project, params["features_id"])
    report = ops.cv_op(
        matrix,
        labels,
        learners=list(params["learners"]),
        folds=int(params.get("folds", 3)),
        seed=int(params.get("seed", 0)),
        dataset_name=params.get("dataset_name", params["features_id"]),
    )
    aid = project.save_artifact(
        "reports",
        report.to_csv(),
        {"features": params["features_id"], "manifest": manifest_id},
        f"job:{params['job_id']}",
    )
    # one confusion matrix per learner that produced predictions, so clients
    # can show the breakdown without recomputing anything
    confusions = {}
    class_list = sorted(set(labels))
    for row in report.rows:
        if row.predicted is None:
            continue
        cm = confusion(labels, row.predicted, class_list)
        confusions[row.learner] = project.save_artifact(
            "reports",
            cm.to_json(),
            {"features": params["features_id"], "report": aid, "learner": row.learner},
            f"job:{params['job_id']}",
        )
    return {"kind": "reports", "id": aid, "rows": len(report.rows), "confusions": confusions}


def run_predict(project: Project, params: dict) -> dict:
    model = model_from_json(project.artifact_text("models", params["model_id"]))
    image_id = params["image_id"]
    pmap = ops.predict_op(model, project.get_image(image_id), int(params["size"]), image_id)
    aid = project.save_artifact(
        "maps",
        pmap.to_json(),
        {"model": params["model_id"], "image": image_id},
        f"job:{params['job_id']}",
    )
    return {"kind": "maps", "id": aid, "cells": len(pmap.cells)}


HANDLERS = {
    "select": run_select,
    "embed": run_embed,
    "train": run_train,
    "cv": run_cv,
    "predict": run_predict,
}


def execute_job(project: Project, job: Job) -> Job:
    """Run one job to a terminal state, journaling each transition."""
    job.status = "running"
    job.started = time.time()
    project.save_job(job)
    try:
        result = HANDLERS[job.kind](project, {**job.parameters, "job_id": job.id})
        job.status = "done"
        job.result = result
    except Exception as exc:
        job.status = "failed"
        job.diagnostics = f"{type(exc).__name__}: {exc}"
    job.finished = time.time()
    project.save_job(job)
    return job


class JobWorker:
    """Single background thread draining a project's job queue in order."""

    def __init__(self, project: Project):
        self.project = project
        self._queue: queue.Queue = queue.Queue()
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="vegmap-jobs", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._queue.put(None)
        if self._thread is not None:
            self._thread.join(timeout=30)

    def submit(self, kind: str, parameters: dict) -> Job:
        job = self.project.new_job(kind, parameters)
        self._queue.put(job.id)
        return job

    def _run(self) -> None:
        while not self._stop.is_set():
            job_id = self._queue.get()
            if job_id is None:
                break
            try:
                job = self.project.get_job(job_id)
                execute_job(self.project, job)
            except Exception:
                # A crash here would silently stall the queue; record it instead.
                traceback.print_exc()
