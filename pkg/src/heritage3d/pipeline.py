"""Five-stage generation pipeline as a persistent, crash-safe state machine.

Each job advances strictly through acquire -> prompt -> synthesize_2d ->
generate_3d -> publish, recording one wall-clock timing per completed
stage. State is an append-only journal (jobs/<id>/journal.ndjson, one JSON
object per line) replayed on load, plus a materialized snapshot.json for
humans and dashboards. Replay is idempotent: a completed stage is never
re-applied, so restarts cannot duplicate timings.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .catalog import Catalog
from .errors import (
    ConfigError,
    JobAlreadyTerminal,
    SiteHasNoImages,
    UnknownJob,
)
from .gateway import BackendProfile, Gateway, SynthesisRequest
from .meshkit import (
    TRIANGLE_BUDGET_HIGH,
    decimate,
    export_obj,
    parse_gltf,
    triangle_count,
    validate,
    write_gltf,
)
from .prompts import (
    AttributeSet,
    PromptText,
    compile_prompt,
)
from .store import AssetRef, AssetStore, MediaType


class Stage(str, Enum):
    ACQUIRE = "acquire"
    PROMPT = "prompt"
    SYNTHESIZE_2D = "synthesize_2d"
    GENERATE_3D = "generate_3d"
    PUBLISH = "publish"
    DONE = "done"
    FAILED = "failed"


STAGE_ORDER = (
    Stage.ACQUIRE,
    Stage.PROMPT,
    Stage.SYNTHESIZE_2D,
    Stage.GENERATE_3D,
    Stage.PUBLISH,
)

TERMINAL_STAGES = (Stage.DONE, Stage.FAILED)


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass(frozen=True)
class StageTiming:
    stage: Stage
    elapsed_s: float
    started_at: str

    def to_dict(self) -> dict:
        return {
            "stage": self.stage.value,
            "elapsed_s": self.elapsed_s,
            "started_at": self.started_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StageTiming":
        return cls(Stage(d["stage"]), float(d["elapsed_s"]), d["started_at"])


@dataclass(frozen=True)
class JobConfig:
    template_id: str = "default"
    image_profile: str = "mock-image"
    mesh_profile: str = "mock-mesh"
    auto_decimate: bool = False
    decimate_target: int = TRIANGLE_BUDGET_HIGH

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "image_profile": self.image_profile,
            "mesh_profile": self.mesh_profile,
            "auto_decimate": self.auto_decimate,
            "decimate_target": self.decimate_target,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JobConfig":
        return cls(
            template_id=d.get("template_id", "default"),
            image_profile=d.get("image_profile", "mock-image"),
            mesh_profile=d.get("mesh_profile", "mock-mesh"),
            auto_decimate=bool(d.get("auto_decimate", False)),
            decimate_target=int(d.get("decimate_target", TRIANGLE_BUDGET_HIGH)),
        )


@dataclass
class GenerationJob:
    job_id: str
    site_id: str
    config: JobConfig
    stage: Stage = Stage.ACQUIRE
    prompt: PromptText | None = None
    iso_image: AssetRef | None = None
    mesh: AssetRef | None = None
    source_images: list[AssetRef] = field(default_factory=list)
    readiness: dict | None = None
    timings: list[StageTiming] = field(default_factory=list)
    completed: list[Stage] = field(default_factory=list)
    error: str | None = None
    published: dict | None = None
    log: list[str] = field(default_factory=list)
    created_at: str = ""
    updated_at: str = ""

    @property
    def total_elapsed_s(self) -> float:
        return sum(t.elapsed_s for t in self.timings)

    def is_terminal(self) -> bool:
        return self.stage in TERMINAL_STAGES

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "site_id": self.site_id,
            "config": self.config.to_dict(),
            "stage": self.stage.value,
            "prompt": self.prompt.to_dict() if self.prompt else None,
            "iso_image": self.iso_image.to_dict() if self.iso_image else None,
            "mesh": self.mesh.to_dict() if self.mesh else None,
            "source_images": [r.to_dict() for r in self.source_images],
            "readiness": self.readiness,
            "timings": [t.to_dict() for t in self.timings],
            "completed": [s.value for s in self.completed],
            "total_elapsed_s": self.total_elapsed_s,
            "error": self.error,
            "published": self.published,
            "log": list(self.log),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


class JobStore:
    """Journal-backed persistence with per-job in-process mutual exclusion."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, job_id: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(job_id)
            if lock is None:
                lock = threading.Lock()
                self._locks[job_id] = lock
            return lock

    def _job_dir(self, job_id: str) -> Path:
        return self.root / job_id

    def journal_path(self, job_id: str) -> Path:
        return self._job_dir(job_id) / "journal.ndjson"

    def exists(self, job_id: str) -> bool:
        return self.journal_path(job_id).exists()

    def list_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "journal.ndjson").exists()
        )

    def append_event(self, job_id: str, event: dict) -> None:
        path = self.journal_path(job_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(event, ensure_ascii=False, sort_keys=True)
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def write_snapshot(self, job: GenerationJob) -> None:
        path = self._job_dir(job.job_id) / "snapshot.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps(job.to_dict(), ensure_ascii=False, indent=2, sort_keys=True),
            encoding="utf-8",
        )
        tmp.replace(path)

    def load(self, job_id: str) -> GenerationJob:
        """Rebuild job state by replaying the journal (snapshot ignored)."""
        path = self.journal_path(job_id)
        if not path.exists():
            raise UnknownJob(f"no job {job_id!r}")
        job: GenerationJob | None = None
        failed = False
        for line in path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event.get("event")
            if kind == "submitted":
                job = GenerationJob(
                    job_id=event["job_id"],
                    site_id=event["site_id"],
                    config=JobConfig.from_dict(event.get("config", {})),
                    readiness=event.get("readiness"),
                    created_at=event.get("at", ""),
                    updated_at=event.get("at", ""),
                )
                job.log.append(event.get("note", "submitted"))
            elif job is None:
                raise UnknownJob(f"journal for {job_id!r} does not start with submission")
            elif kind == "stage_completed":
                stage = Stage(event["stage"])
                if stage in job.completed:
                    continue  # idempotent replay: never re-apply a stage
                _apply_artifacts(job, stage, event.get("artifacts", {}))
                job.timings.append(
                    StageTiming(stage, float(event["elapsed_s"]), event["started_at"])
                )
                job.completed.append(stage)
                failed = False
                job.error = None
                job.updated_at = event.get("at", job.updated_at)
            elif kind == "stage_failed":
                stage = Stage(event["stage"])
                job.timings.append(
                    StageTiming(stage, float(event["elapsed_s"]), event["started_at"])
                )
                job.error = event.get("error", "stage failed")
                job.log.append(f"{stage.value} failed: {job.error}")
                failed = True
                job.updated_at = event.get("at", job.updated_at)
            elif kind == "retry_requested":
                if failed:
                    retry_stage = _next_stage(job)
                    job.timings = [t for t in job.timings if t.stage != retry_stage]
                failed = False
                job.error = None
                job.log.append("retry requested")
                job.updated_at = event.get("at", job.updated_at)
            elif kind == "log":
                job.log.append(event.get("note", ""))
        if job is None:
            raise UnknownJob(f"journal for {job_id!r} is empty")
        if failed:
            job.stage = Stage.FAILED
        elif len(job.completed) == len(STAGE_ORDER):
            job.stage = Stage.DONE
        else:
            job.stage = _next_stage(job)
        return job


def _next_stage(job: GenerationJob) -> Stage:
    return STAGE_ORDER[len(job.completed)]


def _apply_artifacts(job: GenerationJob, stage: Stage, artifacts: dict) -> None:
    if stage is Stage.ACQUIRE:
        job.readiness = artifacts.get("readiness")
        job.source_images = [
            AssetRef.from_dict(r) for r in artifacts.get("images", [])
        ]
        if job.readiness:
            job.log.append(
                "acquire: coverage "
                f"{job.readiness.get('coverage_deg', 0):.1f}°"
                + ("" if job.readiness.get("coverage_ok") else " (below 90° guideline)")
            )
    elif stage is Stage.PROMPT:
        job.prompt = PromptText.from_dict(artifacts["prompt"])
    elif stage is Stage.SYNTHESIZE_2D:
        job.iso_image = AssetRef.from_dict(artifacts["iso_image"])
    elif stage is Stage.GENERATE_3D:
        job.mesh = AssetRef.from_dict(artifacts["mesh"])
        if artifacts.get("decimated"):
            job.log.append("generate_3d: auto-decimated to budget")
    elif stage is Stage.PUBLISH:
        job.published = artifacts.get("published")


class Orchestrator:
    """Drives jobs through the stage machine against catalog/gateway/storage."""

    def __init__(
        self,
        catalog: Catalog,
        store: AssetStore,
        gateway: Gateway,
        jobs: JobStore,
        profiles: dict[str, BackendProfile],
        templates: "TemplateLoader",
        published_root: Path | str,
    ):
        self.catalog = catalog
        self.store = store
        self.gateway = gateway
        self.jobs = jobs
        self.profiles = profiles
        self.templates = templates
        self.published_root = Path(published_root)

    # -- public operations ----------------------------------------------------

    def submit_job(self, site_id: str, config: JobConfig | None = None) -> str:
        config = config or JobConfig()
        site = self.catalog.get_site(site_id)
        if not site.images:
            raise SiteHasNoImages(f"site {site_id!r} has no ingested images")
        self.profile(config.image_profile)  # fail fast on unknown profiles
        self.profile(config.mesh_profile)
        readiness = self.catalog.validate_site_ready(site_id)
        job_id = "job-" + uuid.uuid4().hex[:12]
        note = (
            f"submitted for {site_id}; readiness: coverage "
            f"{readiness.coverage_deg:.1f}°, ok={readiness.coverage_ok}"
        )
        self.jobs.append_event(
            job_id,
            {
                "event": "submitted",
                "job_id": job_id,
                "site_id": site_id,
                "config": config.to_dict(),
                "readiness": readiness.to_dict(),
                "note": note,
                "at": _now_iso(),
            },
        )
        job = self.jobs.load(job_id)
        job.readiness = readiness.to_dict()
        self.jobs.write_snapshot(job)
        return job_id

    def job_status(self, job_id: str) -> GenerationJob:
        return self.jobs.load(job_id)

    def advance(self, job_id: str, retry: bool = False) -> GenerationJob:
        """Execute exactly the next stage (or re-run a failed stage with retry)."""
        with self.jobs.lock(job_id):
            job = self.jobs.load(job_id)
            if job.stage is Stage.DONE:
                raise JobAlreadyTerminal(f"job {job_id} is done")
            if job.stage is Stage.FAILED:
                if not retry:
                    raise JobAlreadyTerminal(
                        f"job {job_id} failed; advance with retry to resume"
                    )
                self.jobs.append_event(
                    job_id, {"event": "retry_requested", "at": _now_iso()}
                )
                job = self.jobs.load(job_id)

            stage = _next_stage(job)
            started_at = _now_iso()
            t0 = time.monotonic()
            try:
                artifacts, elapsed_override = self._execute(stage, job)
            except Exception as exc:
                message = str(exc) or exc.__class__.__name__
                self.jobs.append_event(
                    job_id,
                    {
                        "event": "stage_failed",
                        "stage": stage.value,
                        "error": message,
                        "elapsed_s": time.monotonic() - t0,
                        "started_at": started_at,
                        "at": _now_iso(),
                    },
                )
                job = self.jobs.load(job_id)
                self.jobs.write_snapshot(job)
                return job
            elapsed = (
                elapsed_override if elapsed_override is not None else time.monotonic() - t0
            )
            self.jobs.append_event(
                job_id,
                {
                    "event": "stage_completed",
                    "stage": stage.value,
                    "elapsed_s": elapsed,
                    "started_at": started_at,
                    "artifacts": artifacts,
                    "at": _now_iso(),
                },
            )
            job = self.jobs.load(job_id)
            if stage is Stage.PUBLISH:
                # The manifest was written mid-stage; patch in the final
                # timing list now that the publish timing itself exists.
                self._finalize_manifest(job)
            self.jobs.write_snapshot(job)
            return job

    def run_to_completion(
        self,
        job_id: str,
        retry: bool = False,
        stop_event: threading.Event | None = None,
    ) -> GenerationJob:
        """Advance until Done or Failed; an optional stop event is honored
        between stages (the in-flight stage always completes)."""
        job = self.jobs.load(job_id)
        if retry and job.stage is Stage.FAILED:
            job = self.advance(job_id, retry=True)
        while not job.is_terminal():
            if stop_event is not None and stop_event.is_set():
                break
            job = self.advance(job_id)
        return job

    def profile(self, name: str) -> BackendProfile:
        profile = self.profiles.get(name)
        if profile is None:
            raise ConfigError(f"no backend profile named {name!r}")
        return profile

    # -- stage execution --------------------------------------------------------

    def _execute(self, stage: Stage, job: GenerationJob):
        if stage is Stage.ACQUIRE:
            site = self.catalog.get_site(job.site_id)
            if not site.images:
                raise SiteHasNoImages(f"site {job.site_id!r} has no ingested images")
            readiness = self.catalog.validate_site_ready(job.site_id)
            return {
                "readiness": readiness.to_dict(),
                "images": [r.to_dict() for r in site.image_assets()],
            }, None

        if stage is Stage.PROMPT:
            site = self.catalog.get_site(job.site_id)
            template = self.templates.load(job.config.template_id)
            attrs = AttributeSet(
                site_name=site.name,
                structural_type=site.site_type,
                primary_material=site.material,
                decorative_features=tuple(site.features),
            )
            prompt = compile_prompt(template, attrs, template_id=job.config.template_id)
            return {"prompt": prompt.to_dict()}, None

        if stage is Stage.SYNTHESIZE_2D:
            profile = self.profile(job.config.image_profile)
            request = SynthesisRequest(
                prompt=job.prompt, reference_images=tuple(job.source_images)
            )
            result = self.gateway.synthesize_isometric(request, profile)
            override = (
                result.elapsed_s
                if profile.option("simulate_latency_s") is not None
                else None
            )
            return {"iso_image": result.asset.to_dict()}, override

        if stage is Stage.GENERATE_3D:
            profile = self.profile(job.config.mesh_profile)
            result = self.gateway.generate_mesh(job.iso_image, profile)
            mesh_ref = result.asset
            doc = parse_gltf(self.store.get(mesh_ref.asset_id))
            decimated = False
            if (
                job.config.auto_decimate
                and triangle_count(doc) > job.config.decimate_target
            ):
                doc = decimate(doc, job.config.decimate_target)
                mesh_ref = self.store.put(write_gltf(doc, "json"), MediaType.GLTF_JSON)
                decimated = True
            report = validate(doc)
            override = (
                result.elapsed_s
                if profile.option("simulate_latency_s") is not None
                else None
            )
            return {
                "mesh": mesh_ref.to_dict(),
                "validation": report.to_dict(),
                "decimated": decimated,
            }, override

        if stage is Stage.PUBLISH:
            return {"published": self._publish(job)}, None

        raise JobAlreadyTerminal(f"no executable work for stage {stage.value}")

    def _publish(self, job: GenerationJob) -> dict:
        doc = parse_gltf(self.store.get(job.mesh.asset_id))
        gltf_bytes = write_gltf(doc, "json")
        glb_bytes = write_gltf(doc, "glb")
        obj_bytes = export_obj(doc)
        refs = {
            "model.gltf": self.store.put(gltf_bytes, MediaType.GLTF_JSON),
            "model.glb": self.store.put(glb_bytes, MediaType.GLB),
            "model.obj": self.store.put(obj_bytes, MediaType.OBJ),
        }
        out_dir = self.published_root / job.site_id / job.job_id
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "model.gltf").write_bytes(gltf_bytes)
        (out_dir / "model.glb").write_bytes(glb_bytes)
        (out_dir / "model.obj").write_bytes(obj_bytes)
        report = validate(doc)
        manifest = {
            "job_id": job.job_id,
            "site_id": job.site_id,
            "mesh_asset": job.mesh.asset_id,
            "iso_image_asset": job.iso_image.asset_id if job.iso_image else None,
            "prompt_digest": job.prompt.attr_digest if job.prompt else None,
            "files": {name: ref.to_dict() for name, ref in refs.items()},
            "triangle_count": report.triangle_count,
            "budget_ok": report.budget_ok,
            "watertight": report.watertight,
            "timings": [t.to_dict() for t in job.timings],
        }
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True),
            encoding="utf-8",
        )
        return {
            "dir": str(out_dir.relative_to(self.published_root)),
            "files": {name: ref.to_dict() for name, ref in refs.items()},
        }

    def _finalize_manifest(self, job: GenerationJob) -> None:
        if not job.published:
            return
        path = self.published_root / job.published["dir"] / "manifest.json"
        if not path.exists():
            return
        manifest = json.loads(path.read_text(encoding="utf-8"))
        manifest["timings"] = [t.to_dict() for t in job.timings]
        path.write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True),
            encoding="utf-8",
        )

    def published_file(self, job_id: str, filename: str) -> Path:
        job = self.jobs.load(job_id)
        if job.stage is not Stage.DONE or job.published is None:
            raise UnknownJob(f"job {job_id} has no published model yet")
        return self.published_root / job.published["dir"] / filename


class TemplateLoader:
    """Loads prompt templates from a workspace templates directory."""

    def __init__(self, templates_dir: Path | str):
        self.templates_dir = Path(templates_dir)

    def load(self, template_id: str):
        from .errors import UnknownTemplate
        from .prompts import default_template, parse_template

        path = self.templates_dir / f"{template_id}.prompt"
        if path.exists():
            return parse_template(path.read_text(encoding="utf-8"))
        if template_id == "default":
            return default_template()
        raise UnknownTemplate(f"no template {template_id!r} in {self.templates_dir}")
