"""Workspace: the on-disk layout shared by the CLI and the HTTP service.

    <root>/
      assets/      content-addressed blobs + .meta sidecars
      catalog/     one JSON document per site
      jobs/        per-job journal + snapshot
      published/   <site_id>/<job_id>/model.gltf|model.glb|model.obj|manifest.json
      templates/   <id>.prompt template sources
      backends.conf  optional key=value backend profiles

Built-in deterministic mock profiles ("mock-image", "mock-mesh") are always
available; the config file can add remote profiles or override mock knobs.
API keys are never stored in config, only environment variable names.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path

from .catalog import Catalog
from .errors import ConfigError
from .gateway import (
    AdapterType,
    BackendKind,
    BackendProfile,
    Gateway,
    RetryPolicy,
)
from .pipeline import JobStore, Orchestrator, TemplateLoader
from .prompts import default_template_source
from .store import AssetStore

DATA_DIR_ENV = "HERITAGE3D_DATA"
PORT_ENV = "HERITAGE3D_PORT"
DEFAULT_DATA_DIR = "heritage3d-data"
BACKENDS_CONFIG = "backends.conf"

# Baseline range attached to live job metrics rows (the table's modal row).
DEFAULT_BASELINE_HOURS = ("4", "6")


def builtin_profiles() -> dict[str, BackendProfile]:
    return {
        "mock-image": BackendProfile(
            name="mock-image",
            kind=BackendKind.IMAGE_SYNTHESIS,
            adapter=AdapterType.MOCK,
        ),
        "mock-mesh": BackendProfile(
            name="mock-mesh",
            kind=BackendKind.MESH_GENERATION,
            adapter=AdapterType.MOCK,
        ),
    }


class Workspace:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.assets_dir = self.root / "assets"
        self.catalog_dir = self.root / "catalog"
        self.jobs_dir = self.root / "jobs"
        self.published_dir = self.root / "published"
        self.templates_dir = self.root / "templates"
        for path in (
            self.assets_dir,
            self.catalog_dir,
            self.jobs_dir,
            self.published_dir,
            self.templates_dir,
        ):
            path.mkdir(parents=True, exist_ok=True)
        self._materialize_default_template()

        self.store = AssetStore(self.assets_dir)
        self.catalog = Catalog(self.catalog_dir, self.store)
        self.jobs = JobStore(self.jobs_dir)
        self.gateway = Gateway(self.store)
        self.profiles = builtin_profiles()
        self.profiles.update(load_profiles(self.root / BACKENDS_CONFIG))
        self.templates = TemplateLoader(self.templates_dir)
        self.orchestrator = Orchestrator(
            catalog=self.catalog,
            store=self.store,
            gateway=self.gateway,
            jobs=self.jobs,
            profiles=self.profiles,
            templates=self.templates,
            published_root=self.published_dir,
        )

    @classmethod
    def from_env(cls, root: Path | str | None = None) -> "Workspace":
        chosen = root or os.environ.get(DATA_DIR_ENV) or DEFAULT_DATA_DIR
        return cls(chosen)

    def _materialize_default_template(self) -> None:
        target = self.templates_dir / "default.prompt"
        if not target.exists():
            target.write_text(default_template_source(), encoding="utf-8")


def load_profiles(path: Path) -> dict[str, BackendProfile]:
    """Parse backend profiles from an INI-style key=value config file.

    Section name is the profile name. Recognized keys: kind, adapter,
    endpoint_url, auth_env_var, timeout_s, max_in_flight,
    retry_max_attempts, retry_base_delay_s, retry_backoff_factor,
    retry_jitter_fraction. `option.<name>` keys land in profile options
    (mock knobs such as option.simulate_latency_s, option.mock_style).
    """
    if not path.exists():
        return {}
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path.name}: {exc}") from exc

    profiles: dict[str, BackendProfile] = {}
    for section in parser.sections():
        raw = dict(parser.items(section))
        try:
            kind = BackendKind(raw.pop("kind"))
            adapter = AdapterType(raw.pop("adapter", "remote_http"))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"profile {section!r}: {exc}") from exc
        retry = RetryPolicy(
            max_attempts=int(raw.pop("retry_max_attempts", 3)),
            base_delay_s=float(raw.pop("retry_base_delay_s", 0.5)),
            backoff_factor=float(raw.pop("retry_backoff_factor", 2.0)),
            jitter_fraction=float(raw.pop("retry_jitter_fraction", 0.0)),
        )
        timeout = raw.pop("timeout_s", None)
        options = {}
        for key in list(raw):
            if key.startswith("option."):
                options[key[len("option."):]] = _coerce(raw.pop(key))
        profiles[section] = BackendProfile(
            name=section,
            kind=kind,
            adapter=adapter,
            endpoint_url=raw.pop("endpoint_url", None),
            auth_env_var=raw.pop("auth_env_var", None),
            timeout_s=float(timeout) if timeout is not None else None,
            retry=retry,
            max_in_flight=int(raw.pop("max_in_flight", 2)),
            options=options,
        )
        if raw:
            raise ConfigError(
                f"profile {section!r}: unknown keys {sorted(raw)}"
            )
    return profiles


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value
