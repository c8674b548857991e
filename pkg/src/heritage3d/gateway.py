"""Uniform interface to 2D-synthesis and image-to-3D generation backends.

Remote adapters speak a minimal generic REST shape (multipart POST:
``prompt`` text part plus ``image[n]`` PNG parts, raw bytes back) with
retry/timeout policy; mock adapters are pure functions enabling fully
offline runs. Every call validates the output contract before the asset
is stored: PNGs must be exactly 1024x1024, meshes must parse as glTF 2.0
and validate with zero errors.
"""

from __future__ import annotations

import os
import random
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping

import requests

from .errors import (
    BackendRejected,
    BackendUnreachable,
    ConfigError,
    InvalidOutput,
)
from .imagehdr import sniff_image
from .meshkit import parse_gltf, validate
from .mockgen import mock_isometric_png, mock_mesh_gltf
from .prompts import PromptText
from .store import AssetRef, AssetStore, MediaType, media_type_for_mime

OUTPUT_WIDTH = 1024
OUTPUT_HEIGHT = 1024

DEFAULT_IMAGE_TIMEOUT_S = 30.0  # reported 2D latency envelope
DEFAULT_MESH_TIMEOUT_S = 60.0  # upper bound of the 3D generation window

DEFAULT_MAX_IN_FLIGHT = 2


class BackendKind(str, Enum):
    IMAGE_SYNTHESIS = "image_synthesis"
    MESH_GENERATION = "mesh_generation"


class AdapterType(str, Enum):
    REMOTE_HTTP = "remote_http"
    MOCK = "mock"


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff: delay(n) = base * factor**(n-1) before attempt n+1."""

    max_attempts: int = 3
    base_delay_s: float = 0.5
    backoff_factor: float = 2.0
    jitter_fraction: float = 0.0

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        if self.backoff_factor < 1.0:
            raise ConfigError("backoff_factor must be >= 1")
        if not (0.0 <= self.jitter_fraction <= 1.0):
            raise ConfigError("jitter_fraction must be in [0, 1]")

    def delay_schedule(self) -> list[float]:
        """Pre-jitter delays before attempts 2..max_attempts."""
        return [
            self.base_delay_s * self.backoff_factor ** n
            for n in range(self.max_attempts - 1)
        ]


class TransientFailure(Exception):
    """Internal marker for retryable failures (timeout, 5xx, conn refused)."""


def with_retry(
    call: Callable[[], object],
    policy: RetryPolicy,
    *,
    retryable: tuple[type[BaseException], ...] = (TransientFailure,),
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
):
    """Run `call`, retrying only retryable failures up to max_attempts.

    Non-retryable exceptions propagate immediately; exhaustion raises
    BackendUnreachable carrying the last error. Delays follow the
    exponential schedule, scaled by +-jitter_fraction when configured.
    """
    schedule = policy.delay_schedule()
    last: BaseException | None = None
    for attempt in range(1, policy.max_attempts + 1):
        try:
            return call()
        except retryable as exc:
            last = exc
            if attempt == policy.max_attempts:
                break
            delay = schedule[attempt - 1]
            if policy.jitter_fraction > 0.0:
                r = rng if rng is not None else random
                delay *= 1.0 + policy.jitter_fraction * r.uniform(-1.0, 1.0)
            sleep(delay)
    raise BackendUnreachable(
        f"backend unreachable after {policy.max_attempts} attempts: {last}",
        last_error=last,
    )


@dataclass(frozen=True)
class BackendProfile:
    """Immutable description of one configured backend."""

    name: str
    kind: BackendKind
    adapter: AdapterType
    endpoint_url: str | None = None
    auth_env_var: str | None = None
    timeout_s: float | None = None
    retry: RetryPolicy = RetryPolicy()
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT
    options: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.adapter is AdapterType.REMOTE_HTTP and not self.endpoint_url:
            raise ConfigError(f"profile {self.name!r}: remote_http requires endpoint_url")
        if self.adapter is AdapterType.MOCK and self.endpoint_url:
            raise ConfigError(f"profile {self.name!r}: mock forbids endpoint_url")
        if self.timeout_s is None:
            default = (
                DEFAULT_IMAGE_TIMEOUT_S
                if self.kind is BackendKind.IMAGE_SYNTHESIS
                else DEFAULT_MESH_TIMEOUT_S
            )
            object.__setattr__(self, "timeout_s", default)

    def option(self, key: str, default=None):
        return self.options.get(key, default)


@dataclass(frozen=True)
class SynthesisRequest:
    """Stage-3 request: prompt plus reference views, fixed 1024x1024 output."""

    prompt: PromptText
    reference_images: tuple[AssetRef, ...]
    output_width_px: int = OUTPUT_WIDTH
    output_height_px: int = OUTPUT_HEIGHT

    def __post_init__(self):
        object.__setattr__(self, "reference_images", tuple(self.reference_images))
        if not self.reference_images:
            raise ConfigError("synthesis requires at least one reference image")
        if (self.output_width_px, self.output_height_px) != (OUTPUT_WIDTH, OUTPUT_HEIGHT):
            raise ConfigError("output resolution is fixed at 1024x1024")


@dataclass(frozen=True)
class GatewayResult:
    asset: AssetRef
    elapsed_s: float


class Gateway:
    """Executes synthesis/generation calls against a profile.

    Calls block per request; concurrent calls across jobs are capped per
    profile (max_in_flight) to avoid rate-limit storms.
    """

    def __init__(self, store: AssetStore, *, sleep=time.sleep, post=requests.post):
        self.store = store
        self._sleep = sleep
        self._post = post
        self._semaphores: dict[str, threading.BoundedSemaphore] = {}
        self._sem_lock = threading.Lock()

    def _semaphore(self, profile: BackendProfile) -> threading.BoundedSemaphore:
        with self._sem_lock:
            sem = self._semaphores.get(profile.name)
            if sem is None:
                sem = threading.BoundedSemaphore(profile.max_in_flight)
                self._semaphores[profile.name] = sem
            return sem

    # -- stage 3: 2D isometric synthesis ------------------------------------

    def synthesize_isometric(
        self, request: SynthesisRequest, profile: BackendProfile
    ) -> GatewayResult:
        if profile.kind is not BackendKind.IMAGE_SYNTHESIS:
            raise ConfigError(
                f"profile {profile.name!r} is {profile.kind.value}, "
                "synthesize_isometric needs image_synthesis"
            )
        with self._semaphore(profile):
            started = time.monotonic()
            if profile.adapter is AdapterType.MOCK:
                ref_ids = sorted(ref.asset_id for ref in request.reference_images)
                data = mock_isometric_png(request.prompt.text, ref_ids)
            else:
                images = [self.store.get(ref.asset_id) for ref in request.reference_images]
                data, _ = self._remote_call(profile, request.prompt.text, images)
            media_type, width, height = self._sniff_or_invalid(data)
            if media_type is not MediaType.PNG or (width, height) != (
                request.output_width_px,
                request.output_height_px,
            ):
                raise InvalidOutput(
                    f"expected {request.output_width_px}x{request.output_height_px} PNG, "
                    f"got {media_type.value} {width}x{height}"
                )
            elapsed = self._elapsed(profile, started)
            return GatewayResult(self.store.put(data, MediaType.PNG), elapsed)

    # -- stage 4: image-to-3D generation -------------------------------------

    def generate_mesh(self, image: AssetRef, profile: BackendProfile) -> GatewayResult:
        if profile.kind is not BackendKind.MESH_GENERATION:
            raise ConfigError(
                f"profile {profile.name!r} is {profile.kind.value}, "
                "generate_mesh needs mesh_generation"
            )
        stored = self.store.ref(image.asset_id)
        if stored.media_type is not MediaType.PNG:
            raise ConfigError("generate_mesh input must be a stored PNG asset")
        with self._semaphore(profile):
            started = time.monotonic()
            if profile.adapter is AdapterType.MOCK:
                data = mock_mesh_gltf(
                    image.asset_id,
                    style=profile.option("mock_style"),
                    subdivision=_opt_int(profile.option("mock_subdivision")),
                    wall_divisions=_opt_int(profile.option("mock_wall_divisions")),
                )
                media_type = MediaType.GLTF_JSON
            else:
                image_bytes = self.store.get(image.asset_id)
                data, mime = self._remote_call(profile, "", [image_bytes])
                media_type = media_type_for_mime(mime or "") or MediaType.GLTF_JSON
                if media_type not in (MediaType.GLTF_JSON, MediaType.GLB):
                    media_type = MediaType.GLTF_JSON
            try:
                doc = parse_gltf(data)
            except Exception as exc:
                raise InvalidOutput(f"backend returned unparseable glTF: {exc}") from exc
            report = validate(doc)
            if report.errors:
                raise InvalidOutput(
                    "generated mesh failed validation: " + "; ".join(report.errors)
                )
            elapsed = self._elapsed(profile, started)
            return GatewayResult(self.store.put(data, media_type), elapsed)

    # -- shared plumbing ------------------------------------------------------

    def _elapsed(self, profile: BackendProfile, started: float) -> float:
        simulated = profile.option("simulate_latency_s")
        if simulated is not None:
            return float(simulated)
        return time.monotonic() - started

    def _sniff_or_invalid(self, data: bytes):
        try:
            return sniff_image(data)
        except Exception as exc:
            raise InvalidOutput(f"backend returned undecodable image: {exc}") from exc

    def _remote_call(
        self, profile: BackendProfile, prompt_text: str, images: list[bytes]
    ) -> tuple[bytes, str | None]:
        headers = {}
        if profile.auth_env_var:
            token = os.environ.get(profile.auth_env_var)
            if not token:
                raise ConfigError(
                    f"profile {profile.name!r} expects an API key in "
                    f"${profile.auth_env_var}"
                )
            headers["Authorization"] = f"Bearer {token}"

        files = [("prompt", ("prompt.txt", prompt_text.encode("utf-8"), "text/plain"))]
        for i, image in enumerate(images):
            files.append((f"image[{i}]", (f"image{i}.png", image, "image/png")))

        def attempt():
            try:
                response = self._post(
                    profile.endpoint_url,
                    files=files,
                    headers=headers,
                    timeout=profile.timeout_s,
                )
            except (requests.Timeout, requests.ConnectionError) as exc:
                raise TransientFailure(str(exc)) from exc
            if response.status_code >= 500:
                raise TransientFailure(f"server error {response.status_code}")
            if response.status_code >= 400:
                raise BackendRejected(
                    f"backend rejected request: HTTP {response.status_code}"
                )
            return response.content, response.headers.get("Content-Type")

        return with_retry(attempt, profile.retry, sleep=self._sleep)


def _opt_int(value) -> int | None:
    return None if value is None else int(value)
