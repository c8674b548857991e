"""Per-site stage timings, their aggregation, and speedup versus SfM hours.

Row math runs on decimal.Decimal so one-decimal second values behave like
the printed table (total = t2d + t3d holds exactly); rounding to one
decimal, half-up, happens only when a report is rendered.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from importlib import resources

from .errors import EmptyMetrics, MetricsMismatch

FIXTURE_NAME = "table2"

_SECONDS_PER_HOUR = Decimal(3600)


def _dec(value) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        # Floats come from live timers; keep millisecond granularity.
        return Decimal(f"{value:.3f}")
    return Decimal(str(value))


@dataclass(frozen=True)
class MetricsRow:
    """One site's stage timings plus its photogrammetry baseline range."""

    site_name: str
    t2d_s: Decimal
    t3d_s: Decimal
    total_s: Decimal
    baseline_low_hr: Decimal
    baseline_high_hr: Decimal

    def __post_init__(self):
        for name in ("t2d_s", "t3d_s", "total_s", "baseline_low_hr", "baseline_high_hr"):
            object.__setattr__(self, name, _dec(getattr(self, name)))
        if self.total_s != self.t2d_s + self.t3d_s:
            raise MetricsMismatch(
                f"{self.site_name}: total {self.total_s} != "
                f"{self.t2d_s} + {self.t3d_s}"
            )
        if not (0 < self.baseline_low_hr <= self.baseline_high_hr):
            raise MetricsMismatch(
                f"{self.site_name}: baseline range "
                f"[{self.baseline_low_hr}, {self.baseline_high_hr}] invalid"
            )

    @classmethod
    def build(cls, site_name, t2d_s, t3d_s, baseline_low_hr, baseline_high_hr):
        """Construct with total computed from the stage columns."""
        t2d = _dec(t2d_s)
        t3d = _dec(t3d_s)
        return cls(site_name, t2d, t3d, t2d + t3d, _dec(baseline_low_hr), _dec(baseline_high_hr))

    @property
    def baseline_mid_hr(self) -> Decimal:
        return (self.baseline_low_hr + self.baseline_high_hr) / 2

    def to_dict(self) -> dict:
        return {
            "site_name": self.site_name,
            "t2d_s": float(self.t2d_s),
            "t3d_s": float(self.t3d_s),
            "total_s": float(self.total_s),
            "baseline_low_hr": float(self.baseline_low_hr),
            "baseline_high_hr": float(self.baseline_high_hr),
        }


@dataclass(frozen=True)
class SpeedupRange:
    low: Decimal
    high: Decimal


@dataclass(frozen=True)
class MetricsSummary:
    mean_t2d_s: Decimal
    mean_t3d_s: Decimal
    mean_total_s: Decimal
    mean_baseline_mid_hr: Decimal
    speedup_low: Decimal
    speedup_high: Decimal

    def to_dict(self) -> dict:
        return {
            "mean_t2d_s": float(self.mean_t2d_s),
            "mean_t3d_s": float(self.mean_t3d_s),
            "mean_total_s": float(self.mean_total_s),
            "mean_baseline_mid_hr": float(self.mean_baseline_mid_hr),
            "speedup_low": float(self.speedup_low),
            "speedup_high": float(self.speedup_high),
        }


def aggregate(rows: list[MetricsRow]) -> MetricsSummary:
    """Arithmetic means over rows; speedups from mean total vs mean baselines."""
    if not rows:
        raise EmptyMetrics("cannot aggregate zero rows")
    n = Decimal(len(rows))
    mean_t2d = sum(r.t2d_s for r in rows) / n
    mean_t3d = sum(r.t3d_s for r in rows) / n
    mean_total = sum(r.total_s for r in rows) / n
    mean_mid = sum(r.baseline_mid_hr for r in rows) / n
    mean_low = sum(r.baseline_low_hr for r in rows) / n
    mean_high = sum(r.baseline_high_hr for r in rows) / n
    ratios = speedup(mean_total, (mean_low, mean_high))
    return MetricsSummary(
        mean_t2d_s=mean_t2d,
        mean_t3d_s=mean_t3d,
        mean_total_s=mean_total,
        mean_baseline_mid_hr=mean_mid,
        speedup_low=ratios.low,
        speedup_high=ratios.high,
    )


def speedup(total_seconds, baseline_hours: tuple) -> SpeedupRange:
    """Ratio of baseline hours (as seconds) to pipeline total seconds."""
    total = _dec(total_seconds)
    low = _dec(baseline_hours[0])
    high = _dec(baseline_hours[1])
    if total <= 0:
        raise MetricsMismatch("total_seconds must be positive")
    if not (0 < low <= high):
        raise MetricsMismatch("baseline hours must satisfy 0 < low <= high")
    return SpeedupRange(
        low=low * _SECONDS_PER_HOUR / total,
        high=high * _SECONDS_PER_HOUR / total,
    )


def render_1dp(value: Decimal) -> str:
    """One decimal place, half-up: the table's presentation rounding."""
    return str(_dec(value).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def emit_report(rows: list[MetricsRow], summary: MetricsSummary, format: str) -> bytes:
    """Deterministic CSV or markdown report mirroring the table layout."""
    if format not in ("csv", "markdown"):
        raise ValueError(f"format must be 'csv' or 'markdown', not {format!r}")
    expected = aggregate(rows)
    if expected != summary:
        raise MetricsMismatch("summary does not match aggregate(rows)")

    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["site_name", "t2d_s", "t3d_s", "total_s", "sfm_low_hr", "sfm_high_hr"])
        for r in rows:
            writer.writerow(
                [
                    r.site_name,
                    render_1dp(r.t2d_s),
                    render_1dp(r.t3d_s),
                    render_1dp(r.total_s),
                    render_1dp(r.baseline_low_hr),
                    render_1dp(r.baseline_high_hr),
                ]
            )
        writer.writerow(
            [
                "Average",
                render_1dp(summary.mean_t2d_s),
                render_1dp(summary.mean_t3d_s),
                render_1dp(summary.mean_total_s),
                render_1dp(summary.mean_baseline_mid_hr),
                render_1dp(summary.mean_baseline_mid_hr),
            ]
        )
        return out.getvalue().encode("utf-8")

    lines = [
        "| Site | 2D (s) | 3D (s) | Total (s) | SfM (hr) |",
        "| --- | ---: | ---: | ---: | ---: |",
    ]
    for r in rows:
        sfm = f"{render_1dp(r.baseline_low_hr)}-{render_1dp(r.baseline_high_hr)}"
        lines.append(
            f"| {r.site_name} | {render_1dp(r.t2d_s)} | {render_1dp(r.t3d_s)} "
            f"| {render_1dp(r.total_s)} | {sfm} |"
        )
    lines.append(
        f"| **Average** | {render_1dp(summary.mean_t2d_s)} "
        f"| {render_1dp(summary.mean_t3d_s)} | {render_1dp(summary.mean_total_s)} "
        f"| {render_1dp(summary.mean_baseline_mid_hr)}* |"
    )
    lines.append("")
    lines.append("\\* mean of per-site SfM range midpoints")
    lines.append(
        f"Speedup vs SfM: x{render_1dp(summary.speedup_low)} to "
        f"x{render_1dp(summary.speedup_high)} (mean baseline over mean total)."
    )
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_fixture_rows() -> list[MetricsRow]:
    """The shipped 8-row fixture (metrics.csv), values verbatim."""
    text = resources.files("heritage3d.data").joinpath("metrics.csv").read_text("utf-8")
    return parse_rows_csv(text)


def parse_rows_csv(text: str) -> list[MetricsRow]:
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for record in reader:
        rows.append(
            MetricsRow(
                site_name=record["site_name"],
                t2d_s=Decimal(record["t2d_s"]),
                t3d_s=Decimal(record["t3d_s"]),
                total_s=Decimal(record["total_s"]),
                baseline_low_hr=Decimal(record["sfm_low_hr"]),
                baseline_high_hr=Decimal(record["sfm_high_hr"]),
            )
        )
    return rows
