"""Command-line harness: verify, bench, catalog.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
The bench subcommand needs a device spec JSON ({label, fma_lanes, clock_hz});
its path comes from --device-spec or the GATHERCONV_DEVICE_SPEC environment
variable.
"""
from __future__ import annotations

import argparse
import os
import sys

from .bench import (
    ConfigError,
    RunConfig,
    emit_report,
    render_summary,
    run_bench,
    run_verify,
)
from .blocking import BlockingConfig
from .catalog import catalog_to_json, layer_catalog
from .perf import DeviceSpec
from .tensors import FilterTensor

ENV_DEVICE_SPEC = "GATHERCONV_DEVICE_SPEC"

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2


def _parse_layers(text: str) -> tuple[str, ...] | str:
    if text == "all":
        return "all"
    names = tuple(name.strip() for name in text.split(",") if name.strip())
    return names


def _blocking_from_args(args) -> BlockingConfig:
    return BlockingConfig(bm=args.bm, bn=args.bn, kt=args.kt, rm=args.rm, rn=args.rn)


def _add_blocking_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bm", type=int, default=64, help="batch-block size")
    p.add_argument("--bn", type=int, default=64, help="filter-block size")
    p.add_argument("--kt", type=int, default=8, help="reduction columns per inner iteration")
    p.add_argument("--rm", type=int, default=8, help="register sub-tile rows")
    p.add_argument("--rn", type=int, default=8, help="register sub-tile columns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatherconv",
        description="Blocked implicit-GEMM convolution: correctness and efficiency harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="compare the blocked kernel against the direct oracle")
    v.add_argument("--layers", default="all", help="comma-separated layer names, or 'all'")
    v.add_argument("--minibatch", type=int, default=None, help="minibatch override (default 8)")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--threads", type=int, default=1)
    _add_blocking_args(v)
    # test hook: flip one weight of the named layer to force a failure
    v.add_argument("--corrupt-layer", default=None, help=argparse.SUPPRESS)

    b = sub.add_parser("bench", help="time the blocked kernel over the layer catalog")
    b.add_argument("--layers", default="all", help="comma-separated layer names, or 'all'")
    b.add_argument("--minibatch", type=int, default=None, help="minibatch override (default 128)")
    b.add_argument("--repeat", type=int, default=3, help="timed runs per layer; best is kept")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--seed", type=int, default=42)
    b.add_argument("--device-spec", default=None, help="path to device spec JSON")
    b.add_argument("--out", default=None, help="write the report to this path")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    _add_blocking_args(b)

    c = sub.add_parser("catalog", help="show the built-in layer catalog")
    c.add_argument("--print", action="store_true", dest="print_table", help="print as a table")
    c.add_argument("--json", action="store_true", dest="print_json", help="print as JSON")
    return parser


def _cmd_verify(args) -> int:
    fault_hook = None
    if args.corrupt_layer is not None:
        target = args.corrupt_layer

        def fault_hook(name, filters):
            if name != target:
                return filters
            w = filters.array.copy()
            w[0, 0] += 1.0
            return FilterTensor(w, nc=filters.nc, sk=filters.sk)

    config = RunConfig(
        layers=_parse_layers(args.layers),
        minibatch=args.minibatch,
        seed=args.seed,
        threads=args.threads,
        blocking=_blocking_from_args(args),
    )
    report = run_verify(config, fault_hook=fault_hook)
    for r in report.results:
        status = "ok" if r.passed else "FAIL"
        print(f"{status:>4}  {r.name:<18} max rel error {r.max_rel_error:.3e}")
    if not report.passed:
        worst = report.worst
        print(
            f"verification FAILED: {worst.name} error {worst.max_rel_error:.3e} "
            f"exceeds {worst.tolerance:.0e}",
            file=sys.stderr,
        )
        return EXIT_VERIFY_FAILED
    print(f"verification passed ({len(report.results)} layers)")
    return EXIT_OK


def _cmd_bench(args) -> int:
    spec_path = args.device_spec or os.environ.get(ENV_DEVICE_SPEC)
    if spec_path is None:
        print(
            "no device spec: pass --device-spec FILE or set "
            f"{ENV_DEVICE_SPEC}; the file is JSON with keys "
            "label, fma_lanes, clock_hz",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    device = DeviceSpec.from_json(spec_path)
    config = RunConfig(
        layers=_parse_layers(args.layers),
        minibatch=args.minibatch,
        repeat=args.repeat,
        threads=args.threads,
        seed=args.seed,
        blocking=_blocking_from_args(args),
        device_spec=device,
        out_path=args.out,
        out_format=args.format,
    )
    extras: dict = {}
    reports = run_bench(config, extras_sink=extras)
    print(f"device: {device.label} (peak {2 * device.fma_lanes * device.clock_hz / 1e9:.1f} GFLOP/s)")
    print(render_summary(reports))
    setup_ms = {name: e["setup_ns"] / 1e6 for name, e in extras.items()}
    print("setup ms:", ", ".join(f"{k} {v:.1f}" for k, v in setup_ms.items()))
    if args.out is not None:
        emit_report(reports, args.format, args.out)
        print(f"wrote {args.format} report to {args.out}")
    return EXIT_OK


def _cmd_catalog(args) -> int:
    entries = layer_catalog()
    if args.print_json:
        print(catalog_to_json(entries), end="")
        return EXIT_OK
    print(f"{'layer':<18} {'input':>14} {'output':>14} {'kernel':>7} {'stride':>6} {'pad':>4}")
    for e in entries:
        s = e.shape
        print(
            f"{e.name:<18} {f'{s.wi}x{s.hi}x{s.nc}':>14} "
            f"{f'{s.wo}x{s.ho}x{s.no}':>14} {f'{s.sk}x{s.sk}':>7} "
            f"{s.stride:>6} {s.pad:>4}"
        )
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "catalog":
            return _cmd_catalog(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
