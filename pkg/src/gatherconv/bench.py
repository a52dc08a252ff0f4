"""Verification and benchmark drivers over the layer catalog.

Inputs are reproducible by construction: maps and filter banks are drawn
uniform [-1, 1] from NumPy's default PCG64 generator, seeded per layer from
(run seed, layer index) through SeedSequence. The same seed therefore yields
bit-identical tensors — and bit-identical kernel outputs — on every run and
at every thread count.

Verification compares the blocked kernel against the float64 direct oracle
and fails if any layer's relative max error exceeds VERIFY_TOLERANCE.
Benchmarks time only the kernel (setup — padding, offset table, filter
panels — is reusable and reported separately), warm up once, and keep the
best of N repeats.
"""
from __future__ import annotations

import csv
import io
import json
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blocking import BlockingConfig
from .catalog import LayerCatalogEntry, layer_catalog
from .kernel import conv_blocked, prepare_conv
from .perf import DeviceSpec, EfficiencyReport, format_pct, make_report
from .reference import conv_reference
from .tensors import FilterTensor, MapTensor

VERIFY_TOLERANCE = 1e-4
DEFAULT_VERIFY_MINIBATCH = 8

CSV_HEADER = [
    "network", "layer", "flops_required", "flops_performed",
    "elapsed_ns", "peak_flops", "ce", "ceiling", "threads",
]


class ConfigError(ValueError):
    """Invalid run configuration (bad selection, missing device spec, ...)."""


@dataclass
class RunConfig:
    """Settings shared by verify and bench runs."""

    layers: tuple[str, ...] | str = "all"
    minibatch: int | None = None
    repeat: int = 3
    threads: int = 1
    seed: int = 42
    blocking: BlockingConfig = field(default_factory=BlockingConfig)
    device_spec: DeviceSpec | None = None
    out_path: str | None = None
    out_format: str = "json"

    def __post_init__(self):
        if self.repeat < 1:
            raise ConfigError(f"repeat must be >= 1, got {self.repeat}")
        if self.minibatch is not None and self.minibatch < 1:
            raise ConfigError(f"minibatch must be >= 1, got {self.minibatch}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.out_format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.out_format!r}")

    def select_layers(self, minibatch: int | None = None) -> list[LayerCatalogEntry]:
        nb = minibatch if minibatch is not None else self.minibatch
        catalog = layer_catalog() if nb is None else layer_catalog(minibatch=nb)
        if self.layers == "all":
            selected = catalog
        else:
            by_name = {e.name: e for e in catalog}
            missing = [name for name in self.layers if name not in by_name]
            if missing:
                raise ConfigError(f"unknown layers: {', '.join(missing)}")
            selected = [by_name[name] for name in self.layers]
        if not selected:
            raise ConfigError("no layers selected")
        return selected


def layer_inputs(entry: LayerCatalogEntry, seed: int) -> tuple[MapTensor, FilterTensor]:
    """Seeded uniform [-1, 1] map and filter bank for one catalog layer.

    The stream is keyed on (seed, layer name), so a layer's tensors do not
    depend on which other layers were selected alongside it.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence((seed, zlib.crc32(entry.name.encode())))
    )
    shape = entry.shape
    m = rng.uniform(-1.0, 1.0, (shape.nc, shape.hi, shape.wi, shape.nb)).astype(np.float32)
    w = rng.uniform(-1.0, 1.0, (shape.k, shape.no)).astype(np.float32)
    return (
        MapTensor(m),
        FilterTensor(w, nc=shape.nc, sk=shape.sk),
    )


def relative_max_error(got: np.ndarray, ref: np.ndarray) -> float:
    """max |got - ref| normalized by max |ref| (absolute if ref is all zero)."""
    denom = float(np.max(np.abs(ref)))
    err = float(np.max(np.abs(got.astype(np.float64) - ref.astype(np.float64))))
    return err / denom if denom > 0 else err


@dataclass(frozen=True)
class LayerVerification:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


@dataclass(frozen=True)
class VerifyReport:
    results: tuple[LayerVerification, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def worst(self) -> LayerVerification:
        return max(self.results, key=lambda r: r.max_rel_error)


def run_verify(config: RunConfig, fault_hook=None) -> VerifyReport:
    """Check the blocked kernel against the direct oracle per layer.

    fault_hook(name, filters) -> FilterTensor corrupts the weights fed to the
    blocked kernel only (the oracle keeps the originals), so tests can prove
    a wrong kernel is detected and attributed to its layer.
    """
    nb = config.minibatch if config.minibatch is not None else DEFAULT_VERIFY_MINIBATCH
    results = []
    for entry in config.select_layers(minibatch=nb):
        m, w = layer_inputs(entry, config.seed)
        w_kernel = fault_hook(entry.name, w) if fault_hook is not None else w
        got = conv_blocked(
            m, w_kernel, entry.shape, blocking=config.blocking, threads=config.threads
        )
        ref = conv_reference(m, w, entry.shape)
        err = relative_max_error(got.array, ref.array)
        results.append(LayerVerification(entry.name, err, VERIFY_TOLERANCE))
    return VerifyReport(tuple(results))


def run_bench(
    config: RunConfig,
    extras_sink: dict | None = None,
) -> list[EfficiencyReport]:
    """Time the blocked kernel on the selected layers.

    Per layer: reusable setup once, one warm-up run, then `repeat` timed
    runs keeping the best. extras_sink (a test/inspection hook) receives per
    layer the setup time and a crc32 checksum of the output tensor bytes.
    """
    if config.device_spec is None:
        raise ConfigError(
            "no device spec: supply a JSON file {label, fma_lanes, clock_hz} "
            "via --device-spec or the environment"
        )
    reports = []
    for entry in config.select_layers():
        m, w = layer_inputs(entry, config.seed)

        t0 = time.perf_counter_ns()
        prep = prepare_conv(m, w, entry.shape, config.blocking)
        setup_ns = time.perf_counter_ns() - t0

        out = prep.run(threads=config.threads)  # warm-up
        best_ns = None
        for _ in range(config.repeat):
            t0 = time.perf_counter_ns()
            out = prep.run(threads=config.threads)
            elapsed = time.perf_counter_ns() - t0
            if best_ns is None or elapsed < best_ns:
                best_ns = elapsed

        if extras_sink is not None:
            extras_sink[entry.name] = {
                "setup_ns": setup_ns,
                "output_crc32": zlib.crc32(np.ascontiguousarray(out.array).tobytes()),
            }
        reports.append(
            make_report(
                entry.network, entry.layer, entry.shape, config.blocking,
                best_ns, config.device_spec, config.threads,
            )
        )
    return reports


def reports_to_json(reports: list[EfficiencyReport]) -> str:
    rows = [
        {
            "network": r.network,
            "layer": r.layer,
            "flops_required": r.flops_required,
            "flops_performed": r.flops_performed,
            "elapsed_ns": r.elapsed_ns,
            "peak_flops": r.peak_flops,
            "ce": r.ce,
            "ceiling": r.ceiling,
            "threads": r.threads,
        }
        for r in reports
    ]
    return json.dumps(rows, indent=2) + "\n"


def reports_to_csv(reports: list[EfficiencyReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerow([
            r.network, r.layer, r.flops_required, r.flops_performed,
            r.elapsed_ns, repr(r.peak_flops), repr(r.ce), repr(r.ceiling), r.threads,
        ])
    return buf.getvalue()


def parse_reports_json(text: str) -> list[EfficiencyReport]:
    return [EfficiencyReport(**row) for row in json.loads(text)]


def parse_reports_csv(text: str) -> list[EfficiencyReport]:
    reader = csv.DictReader(io.StringIO(text))
    reports = []
    for row in reader:
        reports.append(
            EfficiencyReport(
                network=row["network"],
                layer=row["layer"],
                flops_required=int(row["flops_required"]),
                flops_performed=int(row["flops_performed"]),
                elapsed_ns=int(row["elapsed_ns"]),
                peak_flops=float(row["peak_flops"]),
                ce=float(row["ce"]),
                ceiling=float(row["ceiling"]),
                threads=int(row["threads"]),
            )
        )
    return reports


def emit_report(reports: list[EfficiencyReport], fmt: str, path: str | Path) -> None:
    """Write reports as JSON or CSV. Refuses an empty report list."""
    if not reports:
        raise ValueError("refusing to emit an empty report list")
    if fmt == "json":
        text = reports_to_json(reports)
    elif fmt == "csv":
        text = reports_to_csv(reports)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    Path(path).write_text(text)


def render_summary(reports: list[EfficiencyReport]) -> str:
    """Human-readable table with CE as a one-decimal percentage."""
    lines = [
        f"{'layer':<18} {'GFLOP req':>10} {'GFLOP done':>11} "
        f"{'ms':>9} {'CE':>7} {'ceiling':>8} {'thr':>4}"
    ]
    for r in reports:
        lines.append(
            f"{r.name:<18} {r.flops_required / 1e9:>10.2f} "
            f"{r.flops_performed / 1e9:>11.2f} {r.elapsed_ns / 1e6:>9.2f} "
            f"{format_pct(r.ce):>7} {format_pct(r.ceiling):>8} {r.threads:>4}"
        )
    return "\n".join(lines)
