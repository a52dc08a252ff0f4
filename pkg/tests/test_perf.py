import json
from fractions import Fraction

import numpy as np
import pytest

from gatherconv import (
    BlockingConfig,
    ConvShape,
    DeviceSpec,
    arithmetic_fraction_model,
    conv_blocked,
    conv_reference_instrumented,
    efficiency,
    find_layer,
    flops_performed,
    flops_required,
    format_pct,
    peak_throughput,
    probe_achievable_peak,
    utilization_ceiling,
)

from conftest import random_instance, random_small_shape


class TestFlopsRequired:
    def test_all_ones_shape(self):
        shape = ConvShape(nb=1, wi=1, hi=1, nc=1, no=1, sk=1)
        assert flops_required(shape) == 4  # 2 * (1 + 1)

    def test_alexnet_conv3(self):
        # 2 * 128 * 13 * 13 * (192*9 + 1) * 384, worked out by hand
        shape = find_layer("alexnet/conv3").shape
        assert flops_required(shape) == 28_724_527_104

    def test_equals_instrumented_operation_count(self, rng):
        for _ in range(6):
            shape = random_small_shape(rng, max_dim=5)
            m, f = random_instance(rng, shape)
            _, macs, scales = conv_reference_instrumented(m, f, shape)
            assert flops_required(shape) == 2 * (macs + scales)

    def test_no_overflow_at_extreme_sizes(self):
        shape = ConvShape(nb=10**6, wi=10**4, hi=10**4, nc=10**4, no=10**4, sk=11)
        # exact integer arithmetic: result far beyond 64-bit range
        assert flops_required(shape) > 2**63

    def test_strictly_monotone_in_each_dim(self):
        base = dict(nb=4, wi=12, hi=10, nc=3, no=5, sk=3, stride=1, pad=1)
        ref = flops_required(ConvShape(**base))
        for field, bump in (("nb", 5), ("nc", 4), ("no", 6), ("wi", 13), ("sk", 5)):
            grown = dict(base)
            grown[field] = bump
            assert flops_required(ConvShape(**grown)) > ref


class TestFlopsPerformed:
    def test_aligned_shape_equals_required(self):
        blocking = BlockingConfig(bm=4, bn=4, kt=4, rm=2, rn=2)
        shape = ConvShape(nb=8, wi=6, hi=6, nc=4, no=8, sk=2)  # k = 16
        assert flops_performed(shape, blocking) == flops_required(shape)

    def test_overfeat_l1_filter_inflation(self):
        # 96 filters pad to 128: a 4/3 inflation in the filter term
        shape = find_layer("overfeat/L1").shape
        blocking = BlockingConfig()
        performed = flops_performed(shape, blocking)
        assert performed == 2 * 56 * 56 * 128 * 128 * (368 + 1)
        # a 128-filter sibling performs the same total: padding absorbs 96 -> 128
        sibling = ConvShape(nb=shape.nb, wi=shape.wi, hi=shape.hi, nc=shape.nc,
                            no=128, sk=shape.sk, stride=shape.stride, pad=shape.pad)
        assert flops_performed(sibling, blocking) == performed
        assert performed / flops_required(shape) == pytest.approx(
            (128 * 369) / (96 * 364), rel=0, abs=1e-12
        )

    def test_matches_per_block_kernel_counter(self, rng):
        # irregular dims: nothing divides the block sizes
        shape = ConvShape(nb=5, wi=7, hi=6, nc=3, no=11, sk=3, stride=2, pad=1)
        blocking = BlockingConfig(bm=4, bn=8, kt=4, rm=2, rn=2)
        m, f = random_instance(rng, shape)
        counts = {}
        conv_blocked(m, f, shape, blocking, executor="per_block", _op_count=counts)
        assert flops_performed(shape, blocking) == 2 * (counts["macs"] + counts["scales"])

    def test_never_below_required(self, rng):
        for _ in range(40):
            shape = random_small_shape(rng, max_dim=10)
            blocking = BlockingConfig(
                bm=int(rng.choice([1, 2, 4, 8, 64])),
                bn=int(rng.choice([1, 2, 4, 8, 64])),
                kt=int(rng.choice([1, 2, 4, 8])),
                rm=1, rn=1,
            )
            req = flops_required(shape)
            perf = flops_performed(shape, blocking)
            assert perf >= req
            aligned = (
                shape.nb % blocking.bm == 0
                and shape.no % blocking.bn == 0
                and shape.k % blocking.kt == 0
            )
            assert (perf == req) == aligned


class TestUtilizationCeiling:
    def test_alexnet_conv2_near_unity(self):
        shape = find_layer("alexnet/conv2").shape
        c = utilization_ceiling(shape, BlockingConfig())
        assert c >= 0.999
        assert c == 1.0  # k = 1600 is a multiple of 8; everything aligns

    def test_overfeat_l1_exact_value(self):
        # required/performed = (364 * 96)/(369 * 128) = 91/123: the padding
        # penalty of 96 filters in 64-wide blocks plus the 363 -> 368 K tail
        shape = find_layer("overfeat/L1").shape
        c = utilization_ceiling(shape, BlockingConfig())
        assert c == pytest.approx(float(Fraction(91, 123)), rel=0, abs=1e-15)
        assert abs(c - 0.75) < 0.02

    def test_unit_blocking_is_exactly_one(self, rng):
        unit = BlockingConfig(bm=1, bn=1, kt=1, rm=1, rn=1)
        for _ in range(15):
            shape = random_small_shape(rng, max_dim=8)
            assert utilization_ceiling(shape, unit) == 1.0

    def test_invariant_under_batch_filter_swap(self, rng):
        for _ in range(20):
            shape = random_small_shape(rng, max_dim=10)
            blocking = BlockingConfig(bm=4, bn=8, kt=2, rm=1, rn=1)
            swapped_shape = ConvShape(
                nb=shape.no, wi=shape.wi, hi=shape.hi, nc=shape.nc, no=shape.nb,
                sk=shape.sk, stride=shape.stride, pad=shape.pad, alpha=shape.alpha,
            )
            swapped_blocking = BlockingConfig(bm=8, bn=4, kt=2, rm=1, rn=1)
            assert utilization_ceiling(shape, blocking) == utilization_ceiling(
                swapped_shape, swapped_blocking
            )

    def test_in_unit_interval(self, rng):
        for _ in range(30):
            shape = random_small_shape(rng, max_dim=12)
            blocking = BlockingConfig(bm=8, bn=8, kt=8, rm=2, rn=2)
            c = utilization_ceiling(shape, blocking)
            assert 0.0 < c <= 1.0


class TestDeviceAndEfficiency:
    def test_peak_formula(self):
        dev = DeviceSpec(label="16 processors x 128 cores at 1 GHz", fma_lanes=2048, clock_hz=1e9)
        assert peak_throughput(dev) == 4.096e12

    def test_peak_minimal(self):
        dev = DeviceSpec(label="one lane at one hertz", fma_lanes=1, clock_hz=1.0)
        assert peak_throughput(dev) == 2.0

    def test_ce_identity(self):
        peak = 1e12
        req = 5 * 10**9
        assert efficiency(req, req / peak, peak) == pytest.approx(1.0)
        assert efficiency(req, 2 * req / peak, peak) == pytest.approx(0.5)

    def test_ce_algebraic_round_trip(self):
        req = 28_724_527_104
        peak = 3.3e11
        elapsed = 0.173
        ce = efficiency(req, elapsed, peak)
        assert ce * elapsed * peak == pytest.approx(req, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            efficiency(100, 0.0, 1e9)
        with pytest.raises(ValueError):
            efficiency(100, 1.0, 0.0)

    def test_warns_above_unity(self):
        with pytest.warns(UserWarning):
            ce = efficiency(10**12, 0.1, 1e9)
        assert ce > 1.0

    def test_percentage_rendering(self):
        assert format_pct(0.955) == "95.5%"
        assert format_pct(0.703) == "70.3%"
        assert format_pct(1.0) == "100.0%"

    def test_spec_json_round_trip(self, tmp_path):
        dev = DeviceSpec(label="desk", fma_lanes=32, clock_hz=2.6e9)
        path = tmp_path / "dev.json"
        path.write_text(dev.to_json())
        assert DeviceSpec.from_json(path) == dev
        assert json.loads(dev.to_json())["fma_lanes"] == 32

    def test_validation(self):
        with pytest.raises(ValueError):
            DeviceSpec(label="bad", fma_lanes=0, clock_hz=1e9)
        with pytest.raises(ValueError):
            DeviceSpec(label="bad", fma_lanes=4, clock_hz=0.0)


class TestArithmeticFraction:
    def test_default_blocking_with_4_wide_loads(self):
        # 64*64*8 FMAs vs (64+64)*8/4 loads and 2*8 index ops
        frac = arithmetic_fraction_model(BlockingConfig(), load_width=4)
        assert frac == pytest.approx(32768 / (32768 + 256 + 16), rel=0, abs=1e-12)
        assert frac == pytest.approx(0.9918, abs=5e-4)

    def test_limit_toward_one(self):
        frac = arithmetic_fraction_model(BlockingConfig(), load_width=10**9)
        # only the index ops remain
        assert frac > 0.999

    def test_unit_everything(self):
        unit = BlockingConfig(bm=1, bn=1, kt=1, rm=1, rn=1)
        assert arithmetic_fraction_model(unit, load_width=1) == pytest.approx(0.2)

    def test_monotone_in_blocking(self):
        small = arithmetic_fraction_model(BlockingConfig(bm=8, bn=8, kt=8, rm=1, rn=1), 4)
        large = arithmetic_fraction_model(BlockingConfig(bm=128, bn=128, kt=8, rm=1, rn=1), 4)
        assert large > small

    def test_rejects_bad_load_width(self):
        with pytest.raises(ValueError):
            arithmetic_fraction_model(BlockingConfig(), load_width=0)


class TestPeakProbe:
    def test_probe_returns_positive_flops(self):
        peak = probe_achievable_peak(n=256, repeats=2)
        assert peak > 1e8  # any machine running this does > 0.1 GFLOP/s
