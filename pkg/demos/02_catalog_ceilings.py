"""Complexity and utilization ceilings across the benchmark catalog.

The utilization ceiling is required FLOPs over performed FLOPs: the bound
that block padding alone places on credited efficiency, before any timing.
Nine of the ten classic layers sit at 0.99-1.00. Overfeat L1 does not: its
96 filters occupy two 64-wide filter blocks (128 lanes), so a quarter of
the arithmetic is wasted on padding — a structural fact of the shape, not a
property of any particular machine.
"""
from gatherconv import (
    BlockingConfig,
    NARROW_BLOCKING,
    flops_performed,
    flops_required,
    format_pct,
    layer_catalog,
    utilization_ceiling,
)

wide = BlockingConfig()            # 64x64 blocks, 8-wide K tiles
narrow = NARROW_BLOCKING           # 64x32 blocks: half-width filter blocks

print(f"{'layer':<18} {'GFLOP req':>10} {'GFLOP done':>11} {'ceiling':>8} {'64x32':>7}")
for entry in layer_catalog():
    s = entry.shape
    req = flops_required(s)
    done = flops_performed(s, wide)
    print(
        f"{entry.name:<18} {req / 1e9:>10.2f} {done / 1e9:>11.2f} "
        f"{format_pct(utilization_ceiling(s, wide)):>8} "
        f"{format_pct(utilization_ceiling(s, narrow)):>7}"
    )

l1 = [e for e in layer_catalog() if e.name == "overfeat/L1"][0].shape
print(
    f"\noverfeat/L1 with 64-wide filter blocks: {l1.no} filters pad to 128, "
    f"ceiling {utilization_ceiling(l1, wide):.4f}"
)
print(
    "with 64x32 blocks the padding vanishes (96 = 3 x 32): "
    f"ceiling {utilization_ceiling(l1, narrow):.4f}"
)
