"""Randomized property checks shared by test_properties and the acceptance
suite.

Each sampled (shape, blocking) pair is driven through structural and
numerical properties of the offset-gather pipeline. Properties that need a
precondition (shift covariance needs room away from the aprons, the literal
per-block executor is only affordable on small plans) keep their own run
counters so callers can require a minimum number of genuine executions per
property.
"""
from __future__ import annotations

from collections import Counter

import numpy as np

from gatherconv import (
    BlockingConfig,
    MapTensor,
    block_plan_size,
    build_block_plan,
    build_offset_table,
    conv_blocked,
    conv_reference,
    from_chwn,
    im2col_explicit,
    pad_problem,
    to_chwn,
    zero_pad,
    crop_pad,
)

from conftest import random_instance, random_small_shape, rel_linf

TOLERANCE = 1e-4

PROPERTIES = (
    "gather_equivalence",
    "plan_partition",
    "oracle_equivalence",
    "linearity",
    "shift_covariance",
    "padding_neutrality",
    "thread_determinism",
    "layout_round_trip",
    "pad_crop_identity",
)


def random_blocking(rng) -> BlockingConfig:
    bm = int(rng.choice([1, 2, 4, 8]))
    bn = int(rng.choice([1, 2, 4, 8]))
    kt = int(rng.choice([1, 2, 4, 8]))
    return BlockingConfig(bm=bm, bn=bn, kt=kt, rm=1, rn=1)


def check_gather_equivalence(m, f, shape, blocking, rng) -> None:
    """Offset-table gather == explicit im2col == direct padded-slice reads."""
    problem = pad_problem(m, f, shape, blocking)
    table = build_offset_table(shape, blocking, batch_stride=problem.nb_padded)
    padded = zero_pad(m, shape.pad)
    s, sk = shape.stride, shape.sk
    wp = shape.padded_wi

    pixels = [(ox, oy) for oy in range(shape.ho) for ox in range(shape.wo)]
    if len(pixels) > 8:
        chosen = rng.choice(len(pixels), size=8, replace=False)
        pixels = [pixels[i] for i in chosen]
    for ox, oy in pixels:
        col = im2col_explicit(m, shape, ox, oy)  # (nb, k)
        base = (oy * s * wp + ox * s) * problem.nb_padded
        gathered = np.empty((shape.nb, shape.k), dtype=np.float32)
        for i in range(shape.k):
            start = base + int(table.entries[i])
            gathered[:, i] = problem.map_flat[start:start + shape.nb]
        direct = (
            padded.array[:, oy * s:oy * s + sk, ox * s:ox * s + sk, :]
            .reshape(shape.k, shape.nb)
            .T
        )
        assert np.array_equal(gathered, col), (shape, blocking, ox, oy)
        assert np.array_equal(col, direct), (shape, blocking, ox, oy)
        # padded tail entries must read exact zeros
        for i in range(shape.k, table.k_padded):
            start = base + int(table.entries[i])
            assert not problem.map_flat[start:start + shape.nb].any()


def check_plan_partition(shape, blocking) -> None:
    plan = build_block_plan(shape, blocking)
    seen = Counter((d.ox, d.oy, d.filter_block, d.batch_block) for d in plan.blocks)
    assert len(seen) == len(plan.blocks), "duplicate block"
    assert max(seen.values(), default=1) == 1
    assert len(plan.blocks) == block_plan_size(shape, blocking)
    assert len(plan.blocks) == (
        shape.wo * shape.ho * plan.n_filter_blocks * plan.n_batch_blocks
    )


def check_oracle_equivalence(m, f, shape, blocking) -> np.ndarray:
    ref = conv_reference(m, f, shape)
    got = conv_blocked(m, f, shape, blocking)
    assert rel_linf(got.array, ref.array) <= TOLERANCE, (shape, blocking)
    # small plans also go through the literal per-block path
    if shape.k <= 80 and block_plan_size(shape, blocking) <= 120:
        per_block = conv_blocked(m, f, shape, blocking, executor="per_block")
        assert rel_linf(per_block.array, ref.array) <= TOLERANCE, (shape, blocking)
    return got.array


def check_linearity(m, f, shape, blocking, base_out, rng) -> None:
    # power-of-two input scaling is exact in IEEE arithmetic
    scaled = conv_blocked(MapTensor(4.0 * m.array), f, shape, blocking)
    assert np.array_equal(scaled.array, 4.0 * base_out)
    # additivity holds to kernel tolerance
    other = MapTensor(
        rng.uniform(-1.0, 1.0, m.array.shape).astype(np.float32)
    )
    lhs = conv_blocked(MapTensor(m.array + other.array), f, shape, blocking)
    rhs = conv_blocked(other, f, shape, blocking)
    denom = max(1.0, float(np.max(np.abs(base_out + rhs.array))))
    assert float(np.max(np.abs(lhs.array - (base_out + rhs.array)))) / denom <= TOLERANCE


def shift_valid_columns(shape) -> range:
    """Output columns whose receptive field stays inside the region that the
    s-pixel shift filled, clear of both aprons."""
    s, p, sk = shape.stride, shape.pad, shape.sk
    lo = -(-(p + s) // s)  # ceil((p + s)/s): field starts at or after x = s
    hi = (shape.wi + p - sk) // s  # field ends before the right apron
    return range(max(lo, 1), hi + 1)


def check_shift_covariance(m, f, shape, blocking, base_out) -> bool:
    """Shifting the input right by `stride` shifts the output right by 1.
    Returns False when no output column has the required clearance.

    The shifted pixel's sums run at a different position inside the GEMM
    calls, so bits may move in the last place; compare to a tolerance well
    below the kernel's contracted one."""
    cols = shift_valid_columns(shape)
    if len(cols) == 0:
        return False
    s = shape.stride
    shifted = np.zeros_like(m.array)
    shifted[:, :, s:, :] = m.array[:, :, :-s, :]
    out = conv_blocked(MapTensor(shifted), f, shape, blocking)
    denom = max(1.0, float(np.max(np.abs(base_out))))
    for ox in cols:
        diff = float(np.max(np.abs(
            out.array[:, :, ox, :] - base_out[:, :, ox - 1, :]
        )))
        assert diff / denom <= 1e-5, (shape, blocking, ox, diff / denom)
    return True


def check_padding_neutrality(m, f, shape, blocking, base_out) -> None:
    bm, bn, kt = blocking.bm, blocking.bn, blocking.kt
    from gatherconv import round_up

    base_nb = round_up(shape.nb, bm)
    base_no = round_up(shape.no, bn)
    base_k = round_up(shape.k, kt)
    for kwargs in (
        {"nb_padded": base_nb + bm},
        {"no_padded": base_no + bn},
        {"k_padded": base_k + 2 * kt},
        {"nb_padded": base_nb + 2 * bm, "no_padded": base_no + bn, "k_padded": base_k + kt},
    ):
        got = conv_blocked(m, f, shape, blocking, **kwargs)
        assert np.array_equal(got.array, base_out), (shape, blocking, kwargs)


def check_thread_determinism(m, f, shape, blocking, base_out) -> None:
    for threads in (2, 3):
        got = conv_blocked(m, f, shape, blocking, threads=threads)
        assert np.array_equal(got.array, base_out), (shape, blocking, threads)


def check_layout_round_trip(rng) -> None:
    dims = tuple(int(d) for d in rng.integers(1, 9, size=4))
    a = rng.uniform(-1.0, 1.0, dims).astype(np.float32)
    assert np.array_equal(from_chwn(to_chwn(a)), a)


def check_pad_crop_identity(m, rng) -> None:
    pad = int(rng.integers(0, 4))
    assert np.array_equal(crop_pad(zero_pad(m, pad), pad).array, m.array)


def run_property_suite(min_runs_per_property: int, seed: int = 990817) -> Counter:
    """Sample random shapes until every property has executed at least
    `min_runs_per_property` times; returns the per-property run counts."""
    rng = np.random.default_rng(seed)
    runs: Counter = Counter()
    shapes_tried = 0
    while (
        min(runs[p] for p in PROPERTIES) < min_runs_per_property
        and shapes_tried < 4 * min_runs_per_property
    ):
        shapes_tried += 1
        shape = random_small_shape(rng)
        blocking = random_blocking(rng)
        m, f = random_instance(rng, shape)

        check_gather_equivalence(m, f, shape, blocking, rng)
        runs["gather_equivalence"] += 1

        check_plan_partition(shape, blocking)
        runs["plan_partition"] += 1

        base_out = check_oracle_equivalence(m, f, shape, blocking)
        runs["oracle_equivalence"] += 1

        check_linearity(m, f, shape, blocking, base_out, rng)
        runs["linearity"] += 1

        if check_shift_covariance(m, f, shape, blocking, base_out):
            runs["shift_covariance"] += 1

        check_padding_neutrality(m, f, shape, blocking, base_out)
        runs["padding_neutrality"] += 1

        check_thread_determinism(m, f, shape, blocking, base_out)
        runs["thread_determinism"] += 1

        check_layout_round_trip(rng)
        runs["layout_round_trip"] += 1

        check_pad_crop_identity(m, rng)
        runs["pad_crop_identity"] += 1

    runs["shapes"] = shapes_tried
    return runs
