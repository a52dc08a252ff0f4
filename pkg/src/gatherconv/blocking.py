"""Gather-offset table, block plan, and block-aligned problem padding.

The blocked kernel never walks the three nested patch loops (channel, kernel
row, kernel column). Those loops are flattened ahead of time into a table of
linear element offsets into the physically padded input map; the inner loop
just adds each precomputed offset to the patch base offset of the output
pixel being computed. The table is padded up to a whole number of K-tiles
with the offset of a guaranteed-all-zero row, so the inner loop never
branches on the reduction tail.

Work is partitioned into independent output tiles: one bm x bn
(batch x filter) block per output pixel per batch-block per filter-block.
Partial blocks are handled by rounding the batch count, filter count, and
reduction length up to block multiples and zero-filling, trading wasted
arithmetic for a branch-free kernel; the perf model accounts for exactly
that waste.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .shapes import ConvShape
from .tensors import FilterTensor, MapTensor


def round_up(x: int, multiple: int) -> int:
    return multiple * ((x + multiple - 1) // multiple)


@dataclass(frozen=True)
class BlockingConfig:
    """Tile geometry of the blocked kernel.

    bm, bn: output tile dims (batch x filter) per block, default 64x64.
    kt: reduction columns loaded per inner-loop iteration.
    rm, rn: accumulator sub-tile each lane keeps live across the K loop.
    """

    bm: int = 64
    bn: int = 64
    kt: int = 8
    rm: int = 8
    rn: int = 8

    def __post_init__(self):
        for name in ("bm", "bn", "kt", "rm", "rn"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.bm % self.rm != 0:
            raise ValueError(f"bm={self.bm} not divisible by rm={self.rm}")
        if self.bn % self.rn != 0:
            raise ValueError(f"bn={self.bn} not divisible by rn={self.rn}")


# 64x32 filter blocks: the lighter configuration for filter counts that are
# multiples of 32 but not 64.
NARROW_BLOCKING = BlockingConfig(bm=64, bn=32, kt=8, rm=8, rn=8)


@dataclass(frozen=True)
class OffsetTable:
    """Precomputed linear gather offsets replacing the patch loops.

    entries[i] for i < k is ((c*hp + ky)*wp + kx) * batch_stride where i
    enumerates taps (c outer, ky, kx inner) and hp, wp are the padded map
    dims. entries[i] for k <= i < k_padded equals zero_row_offset, which
    addresses an all-zero row appended past the padded map so tail taps
    contribute exact zeros.
    """

    k: int
    k_padded: int
    entries: np.ndarray
    zero_row_offset: int
    batch_stride: int

    def __post_init__(self):
        e = np.ascontiguousarray(np.asarray(self.entries, dtype=np.int64))
        if e.shape != (self.k_padded,):
            raise ValueError(f"entries must have length k_padded={self.k_padded}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


def build_offset_table(
    shape: ConvShape, blocking: BlockingConfig, batch_stride: int | None = None
) -> OffsetTable:
    """Flatten the (channel, kernel row, kernel column) loops into offsets.

    Offsets are element counts into the padded map, already scaled by the
    map's innermost (batch) stride. That stride defaults to the padded batch
    count round_up(nb, bm) because the table is consumed against a
    block-padded problem; pass batch_stride explicitly to index a map with a
    different batch extent.
    """
    if batch_stride is None:
        batch_stride = round_up(shape.nb, blocking.bm)
    hp = shape.padded_hi
    wp = shape.padded_wi
    k = shape.k
    k_padded = round_up(k, blocking.kt)

    c = np.arange(shape.nc, dtype=np.int64)[:, None, None]
    ky = np.arange(shape.sk, dtype=np.int64)[None, :, None]
    kx = np.arange(shape.sk, dtype=np.int64)[None, None, :]
    taps = (((c * hp + ky) * wp + kx) * batch_stride).reshape(-1)

    zero_row_offset = shape.nc * hp * wp * batch_stride
    entries = np.full(k_padded, zero_row_offset, dtype=np.int64)
    entries[:k] = taps
    return OffsetTable(
        k=k,
        k_padded=k_padded,
        entries=entries,
        zero_row_offset=zero_row_offset,
        batch_stride=batch_stride,
    )


class BlockDescriptor(NamedTuple):
    """One bm x bn output tile: a single output pixel's batch/filter block."""

    ox: int
    oy: int
    filter_block: int
    batch_block: int
    patch_base: int


@dataclass(frozen=True)
class BlockPlan:
    """Every (output pixel, filter block, batch block) triple, exactly once."""

    shape: ConvShape
    blocking: BlockingConfig
    batch_stride: int
    blocks: tuple[BlockDescriptor, ...]

    @property
    def n_filter_blocks(self) -> int:
        return round_up(self.shape.no, self.blocking.bn) // self.blocking.bn

    @property
    def n_batch_blocks(self) -> int:
        return round_up(self.shape.nb, self.blocking.bm) // self.blocking.bm


def block_plan_size(shape: ConvShape, blocking: BlockingConfig) -> int:
    nfb = round_up(shape.no, blocking.bn) // blocking.bn
    nbb = round_up(shape.nb, blocking.bm) // blocking.bm
    return shape.wo * shape.ho * nfb * nbb


def build_block_plan(
    shape: ConvShape, blocking: BlockingConfig, batch_stride: int | None = None
) -> BlockPlan:
    """Enumerate the independent output blocks of a convolution.

    Each descriptor carries the flat element offset of its patch origin in
    the padded map: ((oy*stride)*wp + ox*stride)*batch_stride plus the
    block's start within the batch dimension.
    """
    if batch_stride is None:
        batch_stride = round_up(shape.nb, blocking.bm)
    wp = shape.padded_wi
    s = shape.stride
    nfb = round_up(shape.no, blocking.bn) // blocking.bn
    nbb = round_up(shape.nb, blocking.bm) // blocking.bm

    blocks = []
    for oy in range(shape.ho):
        for ox in range(shape.wo):
            pixel_base = (oy * s * wp + ox * s) * batch_stride
            for bb in range(nbb):
                base = pixel_base + bb * blocking.bm
                for fb in range(nfb):
                    blocks.append(BlockDescriptor(ox, oy, fb, bb, base))
    return BlockPlan(
        shape=shape, blocking=blocking, batch_stride=batch_stride, blocks=tuple(blocks)
    )


@dataclass(frozen=True)
class PaddedProblem:
    """A convolution instance rounded up to whole blocks and physically padded.

    map_flat is the padded input map in CHWN order with the batch dimension
    widened to nb_padded, followed by one extra all-zero channel plane; the
    plane both absorbs the padded offset-table entries and guarantees any
    patch base plus zero_row_offset stays in bounds. filters is the
    (k_padded, no_padded) bank with new cells zero. Because every padding
    cell is exactly zero, results restricted to real indices equal the
    unpadded results exactly.
    """

    shape: ConvShape
    blocking: BlockingConfig
    nb_padded: int
    no_padded: int
    k_padded: int
    hp: int
    wp: int
    map_flat: np.ndarray
    filters: np.ndarray
    zero_row_offset: int


def pad_problem(
    m: MapTensor,
    f: FilterTensor,
    shape: ConvShape,
    blocking: BlockingConfig,
    nb_padded: int | None = None,
    no_padded: int | None = None,
    k_padded: int | None = None,
) -> PaddedProblem:
    """Physically pad a problem to block multiples.

    The three overrides allow padding beyond the minimum (still block
    multiples); extra padding is pure zero work and never changes the
    cropped result.
    """
    if m.array.shape != (shape.nc, shape.hi, shape.wi, shape.nb):
        raise ValueError(
            f"map dims {m.array.shape} do not match shape "
            f"{(shape.nc, shape.hi, shape.wi, shape.nb)}"
        )
    if f.array.shape != (shape.k, shape.no) or f.nc != shape.nc or f.sk != shape.sk:
        raise ValueError(
            f"filter bank {f.array.shape} (nc={f.nc}, sk={f.sk}) does not match "
            f"shape k={shape.k}, no={shape.no}"
        )

    def resolve(value, minimum, multiple, name):
        if value is None:
            return minimum
        if value < minimum or value % multiple != 0:
            raise ValueError(
                f"{name}={value} must be a multiple of {multiple} and >= {minimum}"
            )
        return value

    nbp = resolve(nb_padded, round_up(shape.nb, blocking.bm), blocking.bm, "nb_padded")
    nop = resolve(no_padded, round_up(shape.no, blocking.bn), blocking.bn, "no_padded")
    kp = resolve(k_padded, round_up(shape.k, blocking.kt), blocking.kt, "k_padded")

    hp = shape.padded_hi
    wp = shape.padded_wi
    plane = hp * wp * nbp
    flat = np.zeros((shape.nc + 1) * plane, dtype=np.float32)
    view = flat[: shape.nc * plane].reshape(shape.nc, hp, wp, nbp)
    view[:, shape.pad:shape.pad + shape.hi, shape.pad:shape.pad + shape.wi, : shape.nb] = m.array

    filters = np.zeros((kp, nop), dtype=np.float32)
    filters[: shape.k, : shape.no] = f.array
    flat.setflags(write=False)
    filters.setflags(write=False)

    return PaddedProblem(
        shape=shape,
        blocking=blocking,
        nb_padded=nbp,
        no_padded=nop,
        k_padded=kp,
        hp=hp,
        wp=wp,
        map_flat=flat,
        filters=filters,
        zero_row_offset=shape.nc * plane,
    )
