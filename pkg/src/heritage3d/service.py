"""HTTP service: the machine-facing surface over catalog, jobs, and models.

Every response is either a documented success shape or an ApiError body
``{"status", "code", "message"}`` (4xx caller faults, 5xx backend faults).
Job execution is asynchronous: POST /jobs starts a worker and clients poll
GET /jobs/{id}. Model and asset downloads carry content-addressed ETags.
"""

from __future__ import annotations

import hashlib
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, File, Form, Query, Request, Response, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import metrics as metrics_mod
from .catalog import CaptureMeta, CaptureSource, SiteRecord
from .errors import (
    BackendRejected,
    BackendUnreachable,
    ConfigError,
    DuplicateSite,
    EmptyName,
    Heritage3DError,
    InvalidAzimuth,
    InvalidOutput,
    JobAlreadyTerminal,
    MetricsMismatch,
    MissingAttribute,
    SiteHasNoImages,
    TemplateParseError,
    UndecodableImage,
    UnknownAsset,
    UnknownJob,
    UnknownSite,
    UnknownTemplate,
)
from .pipeline import JobConfig, Stage
from .workspace import DEFAULT_BASELINE_HOURS, Workspace

_STATUS_BY_ERROR = {
    UnknownSite: 404,
    UnknownJob: 404,
    UnknownAsset: 404,
    UnknownTemplate: 404,
    DuplicateSite: 409,
    JobAlreadyTerminal: 409,
    EmptyName: 400,
    InvalidAzimuth: 400,
    UndecodableImage: 400,
    SiteHasNoImages: 400,
    MetricsMismatch: 400,
    ConfigError: 400,
    TemplateParseError: 400,
    MissingAttribute: 400,
    BackendUnreachable: 502,
    BackendRejected: 502,
    InvalidOutput: 502,
}

_MODEL_FILES = {
    "model.gltf": "model/gltf+json",
    "model.glb": "model/gltf-binary",
    "model.obj": "text/plain; charset=utf-8",
}


def _error_status(exc: Heritage3DError) -> int:
    for cls, status in _STATUS_BY_ERROR.items():
        if isinstance(exc, cls):
            return status
    return 500


class JobRunner:
    """Runs jobs on worker threads; drains gracefully on shutdown.

    The stop event is checked between stages, so shutdown waits for the
    in-flight stage to complete but not for the whole job.
    """

    def __init__(self, workspace: Workspace, max_workers: int = 4):
        self.workspace = workspace
        self.stop_event = threading.Event()
        self.executor = ThreadPoolExecutor(
            max_workers=max_workers, thread_name_prefix="jobrunner"
        )

    def start(self, job_id: str, retry: bool = False) -> None:
        self.executor.submit(self._run, job_id, retry)

    def _run(self, job_id: str, retry: bool) -> None:
        try:
            self.workspace.orchestrator.run_to_completion(
                job_id, retry=retry, stop_event=self.stop_event
            )
        except Heritage3DError:
            pass  # recorded in the job journal; clients see it via GET /jobs

    def shutdown(self) -> None:
        self.stop_event.set()
        self.executor.shutdown(wait=True)


def create_app(workspace: Workspace, ui_dir: Path | str | None = None) -> FastAPI:
    runner = JobRunner(workspace)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        runner.shutdown()

    app = FastAPI(title="heritage3d", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.workspace = workspace
    app.state.runner = runner

    orchestrator = workspace.orchestrator
    catalog = workspace.catalog
    store = workspace.store

    @app.exception_handler(Heritage3DError)
    async def domain_error_handler(request: Request, exc: Heritage3DError):
        status = _error_status(exc)
        return JSONResponse(
            status_code=status,
            content={"status": status, "code": exc.code, "message": str(exc)},
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- sites ---------------------------------------------------------------

    @app.post("/sites", status_code=201)
    def create_site(payload: dict):
        record = SiteRecord(
            name=payload.get("name", ""),
            site_type=payload.get("site_type", ""),
            material=payload.get("material", ""),
            features=list(payload.get("features", [])),
            location=payload.get("location", ""),
            site_id=payload.get("site_id", ""),
        )
        site_id = catalog.register_site(record)
        return catalog.get_site(site_id).to_dict()

    @app.get("/sites")
    def list_sites():
        return {"sites": [record.to_dict() for record in catalog.list_sites()]}

    @app.get("/sites/{site_id}")
    def get_site(site_id: str):
        return catalog.get_site(site_id).to_dict()

    @app.post("/sites/{site_id}/images", status_code=201)
    def ingest_image(
        site_id: str,
        file: UploadFile = File(...),
        azimuth_deg: float = Form(...),
        source: str = Form("local_file"),
    ):
        try:
            capture_source = CaptureSource(source)
        except ValueError as exc:
            raise InvalidAzimuth(f"unknown capture source {source!r}") from exc
        meta = CaptureMeta(azimuth_deg=azimuth_deg, source=capture_source)
        ref = catalog.ingest_image(site_id, file.file.read(), meta)
        readiness = catalog.validate_site_ready(site_id)
        return {**ref.to_dict(), "readiness": readiness.to_dict()}

    # -- jobs -----------------------------------------------------------------

    @app.post("/jobs", status_code=202)
    def submit_job(payload: dict):
        site_id = payload.get("site_id", "")
        flat = dict(payload)
        profiles = payload.get("profiles") or {}
        if "image" in profiles:
            flat.setdefault("image_profile", profiles["image"])
        if "mesh" in profiles:
            flat.setdefault("mesh_profile", profiles["mesh"])
        config = JobConfig.from_dict(flat)
        job_id = orchestrator.submit_job(site_id, config)
        runner.start(job_id)
        return {"job_id": job_id}

    @app.get("/jobs")
    def list_jobs():
        ids = workspace.jobs.list_ids()
        return {"jobs": [orchestrator.job_status(i).to_dict() for i in ids]}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        return orchestrator.job_status(job_id).to_dict()

    @app.post("/jobs/{job_id}/retry", status_code=202)
    def retry_job(job_id: str):
        job = orchestrator.job_status(job_id)
        if job.stage is not Stage.FAILED:
            raise JobAlreadyTerminal(
                f"job {job_id} is {job.stage.value}; only failed jobs can retry"
            )
        runner.start(job_id, retry=True)
        return {"job_id": job_id}

    # -- assets and models ------------------------------------------------------

    @app.get("/assets/{asset_id}")
    def get_asset(asset_id: str, request: Request):
        ref = store.ref(asset_id)
        data = store.get(asset_id)
        return _bytes_response(request, data, ref.media_type.mime)

    @app.get("/models/{job_id}/{filename}")
    def get_model(job_id: str, filename: str, request: Request):
        if filename not in _MODEL_FILES:
            raise UnknownAsset(f"no model file {filename!r}; choose from {sorted(_MODEL_FILES)}")
        path = orchestrator.published_file(job_id, filename)
        if not path.exists():
            raise UnknownAsset(f"published file {filename} missing for job {job_id}")
        return _bytes_response(request, path.read_bytes(), _MODEL_FILES[filename])

    # -- metrics -----------------------------------------------------------------

    @app.get("/metrics")
    def get_metrics(
        format: str = Query("json", pattern="^(json|csv)$"),
        source: str = Query("jobs", pattern="^(jobs|fixture)$"),
    ):
        rows = (
            metrics_mod.load_fixture_rows()
            if source == "fixture"
            else _rows_from_jobs(workspace)
        )
        if format == "json":
            summary = metrics_mod.aggregate(rows) if rows else None
            return {
                "rows": [r.to_dict() for r in rows],
                "summary": summary.to_dict() if summary else None,
            }
        if not rows:
            body = b"site_name,t2d_s,t3d_s,total_s,sfm_low_hr,sfm_high_hr\n"
        else:
            body = metrics_mod.emit_report(rows, metrics_mod.aggregate(rows), "csv")
        return Response(content=body, media_type="text/csv; charset=utf-8")

    if ui_dir is not None and Path(ui_dir).exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _bytes_response(request: Request, data: bytes, media_type: str) -> Response:
    etag = '"' + hashlib.sha256(data).hexdigest() + '"'
    if request.headers.get("if-none-match") == etag:
        return Response(status_code=304, headers={"ETag": etag})
    return Response(content=data, media_type=media_type, headers={"ETag": etag})


def _rows_from_jobs(workspace: Workspace) -> list[metrics_mod.MetricsRow]:
    """Table-shaped rows for completed jobs (2D/3D stage timings)."""
    rows = []
    for job_id in workspace.jobs.list_ids():
        job = workspace.orchestrator.job_status(job_id)
        if job.stage is not Stage.DONE:
            continue
        by_stage = {t.stage: t.elapsed_s for t in job.timings}
        try:
            site_name = workspace.catalog.get_site(job.site_id).name
        except UnknownSite:
            site_name = job.site_id
        rows.append(
            metrics_mod.MetricsRow.build(
                site_name=site_name,
                t2d_s=by_stage.get(Stage.SYNTHESIZE_2D, 0.0),
                t3d_s=by_stage.get(Stage.GENERATE_3D, 0.0),
                baseline_low_hr=DEFAULT_BASELINE_HOURS[0],
                baseline_high_hr=DEFAULT_BASELINE_HOURS[1],
            )
        )
    return rows
