"""Walk one convolution layer through the whole pipeline.

Shows the pieces the blocked kernel is made of — the padded problem, the
gather-offset table, the block plan — then runs the kernel and checks it
against both oracles (direct float64 summation and explicit im2col).
"""
import numpy as np

from gatherconv import (
    BlockingConfig,
    ConvShape,
    FilterTensor,
    MapTensor,
    build_block_plan,
    build_offset_table,
    conv_blocked,
    conv_reference,
    im2col_explicit,
    pad_problem,
    relative_max_error,
)

# A mid-sized layer: 13x13 maps, 32 channels, 48 filters, 3x3 kernel.
shape = ConvShape(nb=16, wi=13, hi=13, nc=32, no=48, sk=3, stride=1, pad=1)
print(f"layer: {shape}")
print(f"output {shape.wo}x{shape.ho}x{shape.no}, reduction length k = {shape.k}")

rng = np.random.default_rng(7)
maps = MapTensor(rng.uniform(-1, 1, (shape.nc, shape.hi, shape.wi, shape.nb)).astype(np.float32))
filters = FilterTensor(
    rng.uniform(-1, 1, (shape.k, shape.no)).astype(np.float32), nc=shape.nc, sk=shape.sk
)

# The offset table turns the three patch loops into one flat list of gather
# offsets. The first 9 entries walk the 3x3 window of channel 0.
blocking = BlockingConfig(bm=16, bn=16, kt=8, rm=4, rn=4)
problem = pad_problem(maps, filters, shape, blocking)
table = build_offset_table(shape, blocking, batch_stride=problem.nb_padded)
print(f"\noffset table: k={table.k} padded to {table.k_padded}")
print(f"first 9 entries (channel 0 window): {[int(x) for x in table.entries[:9]]}")
print(f"tail entries point at the zero row: {table.zero_row_offset}")

# The block plan partitions the output into independent tiles.
plan = build_block_plan(shape, blocking, batch_stride=problem.nb_padded)
print(f"\nblock plan: {len(plan.blocks)} tiles "
      f"({shape.wo}x{shape.ho} pixels x {plan.n_filter_blocks} filter blocks "
      f"x {plan.n_batch_blocks} batch blocks)")

# Run the kernel and judge it against the float64 direct oracle.
out = conv_blocked(maps, filters, shape, blocking)
ref = conv_reference(maps, filters, shape)
print(f"\nblocked vs direct oracle, relative max error: "
      f"{relative_max_error(out.array, ref.array):.3e}")

# im2col is the textbook reduction to matrix multiplication; at any pixel,
# patch @ filters reproduces the same output column.
ox, oy = 6, 6
patch = im2col_explicit(maps, shape, ox, oy)  # (nb, k)
pixel = (patch.astype(np.float64) @ filters.array.astype(np.float64)).T
print(f"im2col at pixel ({ox},{oy}) vs kernel:            "
      f"{relative_max_error(out.array[:, oy, ox, :], pixel):.3e}")
