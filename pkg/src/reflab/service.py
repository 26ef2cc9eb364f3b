"""HTTP JSON API serving annotation tasks and collecting timed responses.

One task per dataset sentence; a worker gets each task at most once. The
record log is append-only JSONL; replaying it reconstructs the exact worker
responses that the ranking pipeline consumes.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .data import IMPOSSIBLE, Dataset, SentenceRecord, WorkerResponse


class RecordLog:
    """Append-only response store, serialized through one writer lock."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seen: set[tuple[str, str]] = set()
        self.records: list[dict] = []
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self.records.append(rec)
                self._seen.add((rec["task_id"], rec["worker_id"]))

    def has(self, task_id: str, worker_id: str) -> bool:
        return (task_id, worker_id) in self._seen

    def append(self, rec: dict) -> None:
        with self._lock:
            key = (rec["task_id"], rec["worker_id"])
            if key in self._seen:
                raise KeyError(key)
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec) + "\n")
            self.records.append(rec)
            self._seen.add(key)


class ResponseIn(BaseModel):
    task_id: str
    worker_id: str = Field(min_length=1)
    chosen: str = Field(min_length=1)
    elapsed_ms: float


def build_app(
    ds: Dataset,
    record_log: RecordLog,
    workers_per_sentence: int = 5,
    static_dir=None,
) -> FastAPI:
    app = FastAPI(title="referring-expression annotation")
    task_order = sorted(ds.sentences)

    def scene_payload(scene_id: str) -> dict:
        scene = ds.scenes[scene_id]
        return {
            "scene_id": scene.scene_id,
            "width": scene.width,
            "height": scene.height,
            "rows": scene.rows,
            "cols": scene.cols,
            "render": scene.render or {},
            "boxes": [
                {
                    "object_id": o.object_id,
                    "x": o.box[0],
                    "y": o.box[1],
                    "w": o.box[2],
                    "h": o.box[3],
                }
                for o in ds.objects_in_scene(scene_id)
            ],
        }

    @app.get("/task")
    def next_task(worker_id: str):
        if not worker_id:
            raise HTTPException(status_code=400, detail="worker_id required")
        for task_id in task_order:
            if record_log.has(task_id, worker_id):
                continue
            sent = ds.sentences[task_id]
            scene_id = ds.objects[sent.object_id].scene_id
            return {
                "task_id": task_id,
                "sentence": " ".join(sent.tokens),
                "scene": scene_payload(scene_id),
            }
        raise HTTPException(status_code=404, detail="no tasks left for this worker")

    @app.post("/response", status_code=201)
    def submit(resp: ResponseIn):
        sent = ds.sentences.get(resp.task_id)
        if sent is None:
            raise HTTPException(status_code=400, detail={"task_id": "unknown task"})
        if resp.elapsed_ms <= 0:
            raise HTTPException(
                status_code=400, detail={"elapsed_ms": "must be strictly positive"}
            )
        scene_id = ds.objects[sent.object_id].scene_id
        valid_objects = {o.object_id for o in ds.objects_in_scene(scene_id)}
        if resp.chosen != IMPOSSIBLE and resp.chosen not in valid_objects:
            raise HTTPException(
                status_code=400, detail={"chosen": "not an object of this scene"}
            )
        if record_log.has(resp.task_id, resp.worker_id):
            raise HTTPException(status_code=409, detail="duplicate (task_id, worker_id)")
        rec = {
            "task_id": resp.task_id,
            "worker_id": resp.worker_id,
            "chosen": resp.chosen,
            "correct": resp.chosen == sent.object_id,
            "elapsed_ms": resp.elapsed_ms,
            "received_at": time.time(),
        }
        try:
            record_log.append(rec)
        except KeyError:
            raise HTTPException(status_code=409, detail="duplicate (task_id, worker_id)")
        return rec

    @app.get("/progress")
    def progress():
        per_worker: dict[str, int] = {}
        for rec in record_log.records:
            per_worker[rec["worker_id"]] = per_worker.get(rec["worker_id"], 0) + 1
        want = len(task_order) * workers_per_sentence
        return {
            "tasks": len(task_order),
            "responses": len(record_log.records),
            "target_responses": want,
            "complete": len(record_log.records) >= want,
            "per_worker": per_worker,
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def responses_from_log(ds: Dataset, log_path) -> dict[str, list[WorkerResponse]]:
    """Worker responses per sentence, reconstructed from a record log."""
    out: dict[str, list[WorkerResponse]] = {}
    log = RecordLog(log_path)
    for rec in log.records:
        sid = rec["task_id"]
        if sid not in ds.sentences:
            continue
        out.setdefault(sid, []).append(
            WorkerResponse(
                worker_id=rec["worker_id"],
                chosen=rec["chosen"],
                correct=bool(rec["correct"]),
                elapsed=rec["elapsed_ms"] / 1000.0,
            )
        )
    return out


def sentences_with_responses(
    ds: Dataset, responses: dict[str, list[WorkerResponse]]
) -> list[SentenceRecord]:
    """Dataset sentences with their responses replaced by collected ones;
    sentences without any collected response are omitted."""
    out = []
    for sid in sorted(responses):
        sent = ds.sentences[sid]
        out.append(
            SentenceRecord(
                sentence_id=sent.sentence_id,
                object_id=sent.object_id,
                tokens=sent.tokens,
                responses=responses[sid],
                rank=None,
            )
        )
    return out
