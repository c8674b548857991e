"""Command-line interface.

Exit codes: 0 success, 1 domain error (reported to stderr with the error
code vocabulary), 2 usage error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import metrics as metrics_mod
from .catalog import CaptureMeta, CaptureSource, SiteRecord
from .errors import Heritage3DError
from .pipeline import JobConfig, Stage
from .prompts import AttributeSet, compile_prompt
from .workspace import DATA_DIR_ENV, DEFAULT_DATA_DIR, PORT_ENV, Workspace


@click.group()
@click.option(
    "--data",
    "data_dir",
    envvar=DATA_DIR_ENV,
    default=DEFAULT_DATA_DIR,
    show_default=True,
    help="Workspace data directory.",
)
@click.pass_context
def cli(ctx, data_dir):
    """Heritage imagery to validated glTF assets, five stages at a time."""
    ctx.obj = Path(data_dir)


def _workspace(ctx) -> Workspace:
    return Workspace(ctx.obj)


@cli.group()
def site():
    """Register sites and ingest multi-view images."""


@site.command("add")
@click.option("--name", required=True, help="Site name (e.g. from the survey sheet).")
@click.option("--type", "site_type", default="", help="Structural type.")
@click.option("--material", default="", help="Primary construction material.")
@click.option("--feature", "features", multiple=True, help="Repeatable feature tag.")
@click.option("--location", default="")
@click.option("--id", "site_id", default="", help="Explicit site id (default: name slug).")
@click.pass_context
def site_add(ctx, name, site_type, material, features, location, site_id):
    ws = _workspace(ctx)
    new_id = ws.catalog.register_site(
        SiteRecord(
            name=name,
            site_type=site_type,
            material=material,
            features=list(features),
            location=location,
            site_id=site_id,
        )
    )
    click.echo(new_id)


@site.command("ingest")
@click.option("--site", "site_id", required=True)
@click.option(
    "--file",
    "image_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--azimuth", required=True, type=float, help="Capture azimuth in [0, 360).")
@click.option(
    "--source",
    type=click.Choice([s.value for s in CaptureSource]),
    default=CaptureSource.LOCAL_FILE.value,
)
@click.option("--captured-at", default=None, help="Capture timestamp (ISO 8601).")
@click.pass_context
def site_ingest(ctx, site_id, image_path, azimuth, source, captured_at):
    ws = _workspace(ctx)
    meta = CaptureMeta(
        azimuth_deg=azimuth, source=CaptureSource(source), captured_at=captured_at
    )
    ref = ws.catalog.ingest_image(site_id, image_path.read_bytes(), meta)
    readiness = ws.catalog.validate_site_ready(site_id)
    click.echo(ref.asset_id)
    click.echo(
        f"coverage: {readiness.coverage_deg:.1f}° "
        f"({'ok' if readiness.coverage_ok else 'below 90° guideline'})",
        err=True,
    )


@cli.group()
def prompt():
    """Prompt template operations."""


@prompt.command("compile")
@click.option("--site", "site_id", required=True)
@click.option("--template", "template_id", default="default", show_default=True)
@click.pass_context
def prompt_compile(ctx, site_id, template_id):
    ws = _workspace(ctx)
    record = ws.catalog.get_site(site_id)
    template = ws.templates.load(template_id)
    attrs = AttributeSet(
        site_name=record.name,
        structural_type=record.site_type,
        primary_material=record.material,
        decorative_features=tuple(record.features),
    )
    result = compile_prompt(template, attrs, template_id=template_id)
    click.echo(result.text)


@cli.group()
def job():
    """Run and inspect generation jobs."""


@job.command("run")
@click.option("--site", "site_id", required=True)
@click.option("--template", "template_id", default="default", show_default=True)
@click.option(
    "--mock/--no-mock",
    default=True,
    show_default=True,
    help="Use the built-in deterministic mock backends.",
)
@click.option("--image-profile", default=None, help="Backend profile for stage 3.")
@click.option("--mesh-profile", default=None, help="Backend profile for stage 4.")
@click.option("--auto-decimate", is_flag=True, default=False)
@click.pass_context
def job_run(ctx, site_id, template_id, mock, image_profile, mesh_profile, auto_decimate):
    """Submit a job and drive it through all five stages."""
    ws = _workspace(ctx)
    if not mock and not (image_profile and mesh_profile):
        raise click.UsageError(
            "--no-mock requires --image-profile and --mesh-profile"
        )
    config = JobConfig(
        template_id=template_id,
        image_profile=image_profile or "mock-image",
        mesh_profile=mesh_profile or "mock-mesh",
        auto_decimate=auto_decimate,
    )
    job_id = ws.orchestrator.submit_job(site_id, config)
    click.echo(job_id)
    result = ws.orchestrator.run_to_completion(job_id)
    for timing in result.timings:
        click.echo(f"  {timing.stage.value:<14} {timing.elapsed_s:8.3f} s")
    click.echo(f"  {'total':<14} {result.total_elapsed_s:8.3f} s")
    if result.stage is Stage.FAILED:
        raise Heritage3DError(f"job failed: {result.error}")
    click.echo(f"stage: {result.stage.value}")


@job.command("status")
@click.argument("job_id")
@click.pass_context
def job_status(ctx, job_id):
    ws = _workspace(ctx)
    job_obj = ws.orchestrator.job_status(job_id)
    click.echo(f"{job_obj.job_id} site={job_obj.site_id} stage={job_obj.stage.value}")
    for timing in job_obj.timings:
        click.echo(f"  {timing.stage.value:<14} {timing.elapsed_s:8.3f} s")
    if job_obj.error:
        click.echo(f"  error: {job_obj.error}")


@cli.command("report")
@click.option(
    "--fixture",
    default=None,
    type=click.Choice([metrics_mod.FIXTURE_NAME]),
    help="Report the shipped benchmark fixture instead of live jobs.",
)
@click.option(
    "--format",
    "fmt",
    default="markdown",
    type=click.Choice(["markdown", "csv"]),
    show_default=True,
)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.pass_context
def report(ctx, fixture, fmt, out):
    """Emit the per-site timing/speedup table."""
    if fixture == metrics_mod.FIXTURE_NAME:
        rows = metrics_mod.load_fixture_rows()
    else:
        from .service import _rows_from_jobs

        rows = _rows_from_jobs(_workspace(ctx))
        if not rows:
            raise Heritage3DError("no completed jobs to report; try --fixture table2")
    body = metrics_mod.emit_report(rows, metrics_mod.aggregate(rows), fmt)
    if out is not None:
        out.write_bytes(body)
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(body.decode("utf-8"), nl=False)


@cli.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", envvar=PORT_ENV, default=8321, show_default=True, type=int)
@click.option(
    "--ui",
    "ui_dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="Directory of built console assets to serve at /ui.",
)
@click.pass_context
def serve(ctx, host, port, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    app = create_app(_workspace(ctx), ui_dir=ui_dir)
    click.echo(f"serving on http://{host}:{port} (data: {ctx.obj})", err=True)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def cli_run(argv: list[str] | None = None) -> int:
    """Programmatic entry point returning the process exit code."""
    try:
        cli.main(args=argv, prog_name="heritage3d", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return 1
    except Heritage3DError as exc:
        click.echo(f"error[{exc.code}]: {exc}", err=True)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_run(sys.argv[1:]))


if __name__ == "__main__":
    main()
