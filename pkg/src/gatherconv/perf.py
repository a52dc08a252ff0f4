"""FLOP accounting, device peak throughput, and computational efficiency.

The complexity of one forward convolution is

    flops_required = 2 * nb * wo * ho * (nc * sk^2 + 1) * no

counting a multiply-accumulate as 2 FLOPs; the "+1" is the per-output scale
by alpha. The blocked kernel additionally pays for its block padding, so

    flops_performed = 2 * wo * ho * pad(nb, bm) * pad(no, bn) * (pad(k, kt) + 1)

with pad(x, m) = m * ceil(x / m). Their ratio is the utilization ceiling:
the hard upper bound block padding places on credited efficiency, regardless
of how fast the kernel runs. Efficiency itself credits only required FLOPs:
CE = flops_required / (elapsed * peak).
"""
from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .blocking import BlockingConfig, round_up
from .shapes import ConvShape


def flops_required(shape: ConvShape) -> int:
    """FLOPs a direct convolution needs: 2*nb*wo*ho*(nc*sk^2 + 1)*no.

    Evaluated in exact (arbitrary-precision) integer arithmetic, so large
    shapes cannot silently overflow.
    """
    return 2 * shape.nb * shape.wo * shape.ho * (shape.nc * shape.sk**2 + 1) * shape.no


def flops_performed(shape: ConvShape, blocking: BlockingConfig) -> int:
    """FLOPs the blocked kernel executes, block padding included.

    Equals the multiply-accumulate plus store-scale count of the per-block
    kernel on the padded problem, again as an exact integer.
    """
    nbp = round_up(shape.nb, blocking.bm)
    nop = round_up(shape.no, blocking.bn)
    kp = round_up(shape.k, blocking.kt)
    return 2 * shape.wo * shape.ho * nbp * nop * (kp + 1)


def utilization_ceiling(shape: ConvShape, blocking: BlockingConfig) -> float:
    """flops_required / flops_performed: the efficiency bound padding imposes."""
    return flops_required(shape) / flops_performed(shape, blocking)


@dataclass(frozen=True)
class DeviceSpec:
    """Peak-throughput description of an abstract FMA machine.

    fma_lanes: scalar fused multiply-add results produced per clock across
    the whole device (for a CPU: cores * SIMD float32 width * FMA ports).
    clock_hz: sustained clock rate.
    """

    label: str
    fma_lanes: int
    clock_hz: float

    def __post_init__(self):
        if self.fma_lanes < 1:
            raise ValueError(f"fma_lanes must be >= 1, got {self.fma_lanes}")
        if self.clock_hz <= 0:
            raise ValueError(f"clock_hz must be > 0, got {self.clock_hz}")

    @classmethod
    def from_json(cls, path: str | Path) -> "DeviceSpec":
        cfg = json.loads(Path(path).read_text())
        return cls(
            label=cfg["label"],
            fma_lanes=int(cfg["fma_lanes"]),
            clock_hz=float(cfg["clock_hz"]),
        )

    def to_json(self) -> str:
        return json.dumps(
            {"label": self.label, "fma_lanes": self.fma_lanes, "clock_hz": self.clock_hz},
            indent=2,
        ) + "\n"


def peak_throughput(dev: DeviceSpec) -> float:
    """Device peak in FLOPs/s: 2 FLOPs per FMA * lanes * clock."""
    return 2.0 * dev.fma_lanes * dev.clock_hz


def efficiency(flops_req: int, elapsed_seconds: float, peak_flops: float) -> float:
    """Computational efficiency: required FLOPs over (time * device peak).

    Only the FLOPs the direct algorithm requires are credited; padding waste
    earns nothing. Values above 1 indicate a mis-specified device peak and
    raise a warning rather than an error.
    """
    if elapsed_seconds <= 0:
        raise ValueError(f"elapsed must be > 0, got {elapsed_seconds}")
    if peak_flops <= 0:
        raise ValueError(f"peak must be > 0, got {peak_flops}")
    ce = flops_req / (elapsed_seconds * peak_flops)
    if ce > 1.0:
        warnings.warn(
            f"computational efficiency {ce:.3f} exceeds 1.0; "
            "the device peak is probably understated",
            stacklevel=2,
        )
    return ce


def format_pct(fraction: float) -> str:
    """Render a fraction the way efficiency tables print it: '95.5%'."""
    return f"{fraction * 100:.1f}%"


def arithmetic_fraction_model(blocking: BlockingConfig, load_width: int) -> float:
    """Coarse floating-point instruction fraction of the inner loop.

    Per K-tile iteration the kernel issues bm*bn*kt FMAs, (bm + bn)*kt /
    load_width wide loads, and 2*kt index additions. This deliberately
    ignores ISA details (dual issue, addressing modes); it only shows how
    the blocking drives the arithmetic fraction toward 1.
    """
    if load_width < 1:
        raise ValueError(f"load_width must be >= 1, got {load_width}")
    fma = blocking.bm * blocking.bn * blocking.kt
    wide_loads = (blocking.bm + blocking.bn) * blocking.kt / load_width
    index_ops = 2 * blocking.kt
    return fma / (fma + wide_loads + index_ops)


@dataclass(frozen=True)
class EfficiencyReport:
    """One benchmarked layer: counts, timing, and derived efficiency."""

    network: str
    layer: str
    flops_required: int
    flops_performed: int
    elapsed_ns: int
    peak_flops: float
    ce: float
    ceiling: float
    threads: int

    @property
    def name(self) -> str:
        return f"{self.network}/{self.layer}"

    @property
    def elapsed_seconds(self) -> float:
        return self.elapsed_ns / 1e9


def make_report(
    network: str,
    layer: str,
    shape: ConvShape,
    blocking: BlockingConfig,
    elapsed_ns: int,
    dev: DeviceSpec,
    threads: int,
) -> EfficiencyReport:
    req = flops_required(shape)
    peak = peak_throughput(dev)
    return EfficiencyReport(
        network=network,
        layer=layer,
        flops_required=req,
        flops_performed=flops_performed(shape, blocking),
        elapsed_ns=elapsed_ns,
        peak_flops=peak,
        ce=efficiency(req, elapsed_ns / 1e9, peak),
        ceiling=utilization_ceiling(shape, blocking),
        threads=threads,
    )


def probe_achievable_peak(n: int = 1024, repeats: int = 3) -> float:
    """Measured FLOPs/s of a float32 matrix multiply at the default BLAS
    threading — a sanity anchor for DeviceSpec values, not a hardware query."""
    rng = np.random.default_rng(0)
    a = rng.uniform(-1.0, 1.0, (n, n)).astype(np.float32)
    b = rng.uniform(-1.0, 1.0, (n, n)).astype(np.float32)
    a @ b  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        a @ b
        best = min(best, time.perf_counter() - t0)
    return 2.0 * n * n * n / best
