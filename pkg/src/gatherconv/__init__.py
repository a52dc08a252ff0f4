"""gatherconv: implicit-GEMM convolution over a precomputed gather-offset
table, with hierarchical blocking and FLOP-efficiency metrology.

The package provides three layers:

* tensors and shapes — batch-innermost map/filter containers, physical zero
  padding, layout converters, and the classic ten-layer benchmark catalog;
* kernels — a float64 direct oracle, an explicit im2col oracle, and the
  blocked gather/GEMM kernel they validate;
* metrology — required/performed FLOP counts, utilization ceilings, device
  peak throughput, computational efficiency, and a benchmark harness.
"""

from .bench import (
    ConfigError,
    RunConfig,
    VerifyReport,
    emit_report,
    layer_inputs,
    parse_reports_csv,
    parse_reports_json,
    relative_max_error,
    render_summary,
    run_bench,
    run_verify,
)
from .blocking import (
    NARROW_BLOCKING,
    BlockDescriptor,
    BlockingConfig,
    BlockPlan,
    OffsetTable,
    PaddedProblem,
    block_plan_size,
    build_block_plan,
    build_offset_table,
    pad_problem,
    round_up,
)
from .catalog import (
    LayerCatalogEntry,
    catalog_to_json,
    default_catalog_bytes,
    find_layer,
    layer_catalog,
    load_catalog,
)
from .kernel import PreparedConv, block_matmul_tile, conv_blocked, prepare_conv
from .perf import (
    DeviceSpec,
    EfficiencyReport,
    arithmetic_fraction_model,
    efficiency,
    flops_performed,
    flops_required,
    format_pct,
    make_report,
    peak_throughput,
    probe_achievable_peak,
    utilization_ceiling,
)
from .reference import conv_reference, conv_reference_instrumented, im2col_explicit
from .shapes import ConvShape, conv_output_size, output_dims
from .tensors import (
    FilterTensor,
    MapTensor,
    crop_pad,
    from_chwn,
    map_for_shape,
    to_chwn,
    zero_pad,
)

__version__ = "0.1.0"

__all__ = [
    "BlockDescriptor",
    "BlockPlan",
    "BlockingConfig",
    "ConfigError",
    "ConvShape",
    "DeviceSpec",
    "EfficiencyReport",
    "FilterTensor",
    "LayerCatalogEntry",
    "MapTensor",
    "NARROW_BLOCKING",
    "OffsetTable",
    "PaddedProblem",
    "PreparedConv",
    "RunConfig",
    "VerifyReport",
    "arithmetic_fraction_model",
    "block_matmul_tile",
    "block_plan_size",
    "build_block_plan",
    "build_offset_table",
    "catalog_to_json",
    "conv_blocked",
    "conv_output_size",
    "conv_reference",
    "conv_reference_instrumented",
    "crop_pad",
    "default_catalog_bytes",
    "efficiency",
    "emit_report",
    "find_layer",
    "flops_performed",
    "flops_required",
    "format_pct",
    "from_chwn",
    "im2col_explicit",
    "layer_catalog",
    "layer_inputs",
    "load_catalog",
    "make_report",
    "map_for_shape",
    "output_dims",
    "pad_problem",
    "parse_reports_csv",
    "parse_reports_json",
    "peak_throughput",
    "prepare_conv",
    "probe_achievable_peak",
    "relative_max_error",
    "render_summary",
    "round_up",
    "run_bench",
    "run_verify",
    "to_chwn",
    "utilization_ceiling",
    "zero_pad",
]
