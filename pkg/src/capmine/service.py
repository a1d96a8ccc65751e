"""HTTP front door: chunked uploads, mining with the result cache, data access.

Every JSON body is serialized with sorted keys and compact separators, and
mining responses are served from the stored canonical bytes, so a cache hit
is byte-identical to the miss that produced it. The ``X-Cache`` header is
the only difference the client sees.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles

from . import errors
from .ingest import UploadSession
from .miner import (
    MiningResult,
    mine,
    params_from_dict,
    result_geojson,
)
from .store import Store


@dataclass
class ServiceConfig:
    port: int = 8765
    data_dir: str | Path | None = None
    workers: int = 2
    async_threshold_sensors: int | None = None
    cors_origin: str | None = "*"
    max_upload_bytes: int = 256 * 1024 * 1024
    static_dir: str | Path | None = None

    def database_path(self) -> str:
        if self.data_dir is None:
            return ":memory:"
        directory = Path(self.data_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return str(directory / "capmine.sqlite")


@dataclass
class Job:
    id: str
    state: str = "queued"
    done: int = 0
    total: int = 0
    result_key: str | None = None
    error: str | None = None

    def to_doc(self) -> dict:
        return {
            "job": self.id,
            "state": self.state,
            "progress": {"done": self.done, "total": self.total},
            "result_key": self.result_key,
            "error": self.error,
        }


def _canonical(doc, status: int = 200, headers: dict | None = None) -> Response:
    body = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return Response(
        content=body, status_code=status, media_type="application/json", headers=headers
    )


_ERROR_STATUS = {
    errors.NotFound: 404,
    errors.UnknownSensor: 404,
    errors.InvalidParams: 422,
    errors.MissingChunks: 409,
    errors.SessionClosed: 409,
    errors.ParseError: 400,
}


def _status_for(exc: errors.CapmineError) -> int:
    for klass, status in _ERROR_STATUS.items():
        if isinstance(exc, klass):
            return status
    return 500


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = Store(config.database_path())
    sessions: dict[str, UploadSession] = {}
    jobs: dict[str, Job] = {}
    lock = threading.RLock()
    executor = ThreadPoolExecutor(max_workers=config.workers)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        executor.shutdown(wait=False, cancel_futures=True)
        store.close()

    app = FastAPI(lifespan=lifespan)
    app.state.store = store
    app.state.config = config

    if config.cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
            expose_headers=["X-Cache", "X-Result-Key"],
        )

    @app.exception_handler(errors.CapmineError)
    async def capmine_error(request: Request, exc: errors.CapmineError):
        doc = {"error": type(exc).__name__, "message": str(exc)}
        line = getattr(exc, "line", None)
        if line:
            doc["line"] = line
        kind = getattr(exc, "kind", None)
        if kind:
            doc["file"] = kind
        return _canonical(doc, status=_status_for(exc))

    # -- uploads -------------------------------------------------------------

    @app.post("/datasets/{name}/upload-session")
    async def open_session(name: str, request: Request):
        try:
            doc = await request.json()
        except Exception:
            raise errors.InvalidParams("body must be JSON")
        expected = doc.get("expected") if isinstance(doc, dict) else None
        if not isinstance(expected, dict):
            raise errors.InvalidParams('body must carry {"expected": {file: chunk count}}')
        clean: dict[str, int] = {}
        for kind, count in expected.items():
            if kind not in UploadSession.FILE_KINDS:
                raise errors.InvalidParams(f"unknown file kind {kind!r}")
            if not isinstance(count, int) or count < 1:
                raise errors.InvalidParams(f"chunk count for {kind} must be >= 1")
            clean[kind] = count
        for kind in UploadSession.FILE_KINDS:
            if kind not in clean:
                raise errors.InvalidParams(f"missing expected chunk count for {kind}")
        with lock:
            sessions[name] = UploadSession(name, clean)
        return _canonical({"dataset": name, "state": "open", "expected": clean})

    @app.post("/datasets/{name}/upload-session/chunks/{file_kind}/{seq}")
    async def upload_chunk(name: str, file_kind: str, seq: int, request: Request):
        body = await request.body()
        with lock:
            session = sessions.get(name)
            if session is None:
                raise errors.NotFound(f"no open upload session for {name!r}")
            if session.received_bytes() + len(body) > config.max_upload_bytes:
                return _canonical(
                    {"error": "TooLarge", "message": "upload exceeds configured size cap"},
                    status=413,
                )
            try:
                session.add_chunk(file_kind, seq, body)
            except ValueError as exc:
                raise errors.InvalidParams(str(exc))
            received = session.received_bytes()
        return _canonical(
            {"dataset": name, "file": file_kind, "seq": seq, "received_bytes": received}
        )

    @app.post("/datasets/{name}/upload-session/commit")
    async def commit_session(name: str):
        with lock:
            session = sessions.get(name)
            if session is None:
                raise errors.NotFound(f"no open upload session for {name!r}")
            missing = session.missing()
            if missing:
                return _canonical(
                    {
                        "error": "MissingChunks",
                        "message": "upload incomplete",
                        "missing": [{"file": kind, "seq": seq} for kind, seq in missing],
                    },
                    status=409,
                )
            try:
                dataset = session.commit()
            except errors.ParseError as exc:
                doc = {"error": type(exc).__name__, "message": str(exc)}
                if exc.kind:
                    doc["file"] = exc.kind
                if exc.line:
                    doc["line"] = exc.line
                return _canonical(doc, status=400)
            store.put_dataset(name, dataset)
            del sessions[name]
        return _canonical(
            {
                "name": name,
                "content_hash": dataset.content_hash,
                "sensor_count": dataset.sensor_count,
                "attribute_count": len(dataset.attributes),
                "timestamp_count": dataset.grid.count,
                "grid": {
                    "start": dataset.grid.start,
                    "step": dataset.grid.step,
                    "count": dataset.grid.count,
                },
            }
        )

    # -- mining --------------------------------------------------------------

    def _mine_to_cache(name: str, params) -> tuple[str, bytes]:
        """Miss path: load, mine, store. Returns (key, canonical body)."""
        dataset = store.get_dataset(name)
        result = mine(dataset, params)
        key = result.cache_key()
        store.put_cached(key, result)
        return key, result.to_json_bytes()

    def _run_job(job: Job, name: str, params, key: str) -> None:
        with lock:
            job.state = "running"
        try:
            cached = store.get_cached(key)
            if cached is None:
                dataset = store.get_dataset(name)

                def on_progress(done: int, total: int) -> None:
                    with lock:
                        job.done, job.total = done, total

                result = mine(dataset, params, progress=on_progress)
                store.put_cached(key, result)
            with lock:
                job.state = "done"
                job.result_key = key
        except Exception as exc:  # surface anything to the poller
            with lock:
                job.state = "failed"
                job.error = f"{type(exc).__name__}: {exc}"

    @app.post("/datasets/{name}/mine")
    async def mine_dataset(name: str, request: Request):
        try:
            doc = await request.json()
        except Exception:
            raise errors.InvalidParams("body must be JSON")
        if not isinstance(doc, dict) or "params" not in doc:
            raise errors.InvalidParams('body must carry a "params" object')
        params = params_from_dict(doc["params"])
        content_hash = store.get_dataset_hash(name)
        key = f"{content_hash}:{params.digest()}"

        run_async = bool(doc.get("async", False))
        if config.async_threshold_sensors is not None and not run_async:
            with lock:
                counts = {d["name"]: d["sensor_count"] for d in store.list_datasets()}
            if counts.get(name, 0) >= config.async_threshold_sensors:
                run_async = True

        if run_async:
            job = Job(id=uuid.uuid4().hex)
            with lock:
                jobs[job.id] = job
            executor.submit(_run_job, job, name, params, key)
            return _canonical(job.to_doc(), status=202)

        cached = store.get_cached(key)
        headers = {"X-Result-Key": key}
        if cached is not None:
            headers["X-Cache"] = "hit"
            return Response(cached, media_type="application/json", headers=headers)
        key, body = _mine_to_cache(name, params)
        headers["X-Cache"] = "miss"
        return Response(body, media_type="application/json", headers=headers)

    @app.get("/jobs/{job_id}")
    async def job_status(job_id: str):
        with lock:
            job = jobs.get(job_id)
            if job is None:
                raise errors.NotFound(f"no job {job_id!r}")
            return _canonical(job.to_doc())

    # -- data access -----------------------------------------------------------

    @app.get("/datasets")
    async def list_datasets():
        return _canonical(store.list_datasets())

    @app.get("/datasets/{name}/sensors")
    async def list_sensors(name: str):
        dataset = store.get_dataset(name)
        return _canonical(
            [
                {"id": s.id, "attribute": s.attribute, "lat": s.lat, "lon": s.lon}
                for s in dataset.sensors
            ]
        )

    @app.get("/datasets/{name}/sensors/{sensor_id}/{attribute}/series")
    async def sensor_series(
        name: str,
        sensor_id: str,
        attribute: str,
        from_ts: int | None = Query(None, alias="from"),
        to_ts: int | None = Query(None, alias="to"),
    ):
        dataset = store.get_dataset(name)
        key = (sensor_id, attribute)
        dataset.sensor_by_key(key)  # 404 for unknown sensors
        grid = dataset.grid
        if grid.count == 0:
            return _canonical(
                {"id": sensor_id, "attribute": attribute, "timestamps": [], "values": []}
            )
        last = grid.timestamp_at(grid.count - 1)
        lo = grid.start if from_ts is None else from_ts
        hi = last if to_ts is None else to_ts
        if lo > hi or hi < grid.start or lo > last:
            return _canonical(
                {"error": "EmptyWindow", "message": "window misses the time grid"},
                status=416,
            )
        i0 = max(0, (lo - grid.start) // grid.step)
        i1 = min(grid.count - 1, -((grid.start - hi) // grid.step))
        values = dataset.series[key]
        window = values[i0 : i1 + 1]
        out_values = [None if v != v else float(v) for v in window.tolist()]
        timestamps = [grid.timestamp_at(i) for i in range(i0, i1 + 1)]
        return _canonical(
            {
                "id": sensor_id,
                "attribute": attribute,
                "timestamps": timestamps,
                "values": out_values,
            }
        )

    # -- results ---------------------------------------------------------------

    @app.get("/results/{key}/geojson")
    async def result_as_geojson(key: str):
        body = store.get_cached(key)
        if body is None:
            raise errors.NotFound(f"no result under key {key}")
        result = MiningResult.from_json_bytes(body)
        dataset = store.get_dataset_by_hash(result.dataset_hash)
        return _canonical(result_geojson(result, dataset))

    @app.get("/results/{key}")
    async def get_result(key: str):
        body = store.get_cached(key)
        if body is None:
            raise errors.NotFound(f"no result under key {key}")
        return Response(body, media_type="application/json")

    @app.get("/datasets/{name}/sensors/{sensor_id}/{attribute}/correlated")
    async def correlated_sensors(name: str, sensor_id: str, attribute: str, result: str):
        content_hash = store.get_dataset_hash(name)
        body = store.get_cached(result)
        if body is None:
            raise errors.NotFound(f"no result under key {result}")
        mining_result = MiningResult.from_json_bytes(body)
        if mining_result.dataset_hash != content_hash:
            raise errors.NotFound(f"result {result} does not belong to dataset {name!r}")
        dataset = store.get_dataset(name)
        dataset.sensor_by_key((sensor_id, attribute))  # 404 for unknown sensors
        partners: set[tuple[str, str]] = set()
        for cap in mining_result.caps:
            keys = cap.sensor_keys
            if (sensor_id, attribute) in keys:
                partners.update(keys)
        partners.discard((sensor_id, attribute))
        return _canonical(
            [{"id": sid, "attribute": attr} for sid, attr in sorted(partners)]
        )

    if config.static_dir is not None:
        app.mount("/", StaticFiles(directory=str(config.static_dir), html=True), name="ui")

    return app


def serve(config: ServiceConfig, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=config.port, log_level="info")
