"""Direct-summation convolution oracles.

`conv_reference` is the ground truth the blocked kernel is checked against:
it walks the reduction taps in the canonical order (channel outermost, then
kernel row, then kernel column) and accumulates in 64-bit floats, one
vectorized rank-1 update per tap. It deliberately shares no machinery with
the gather/GEMM path.

`conv_reference_instrumented` is a plain-Python quadruple loop that counts
every multiply-accumulate and every output scale as it performs them. It is
far too slow for real layers; it exists so FLOP-count formulas can be checked
against operations actually executed.

`im2col_explicit` materializes the unrolled patch matrix for one output
pixel, the classical reduction of convolution to matrix multiplication.
"""
from __future__ import annotations

import numpy as np

from .shapes import ConvShape
from .tensors import FilterTensor, MapTensor


def _check_instance(m: MapTensor, f: FilterTensor, shape: ConvShape) -> None:
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


def conv_reference(m: MapTensor, f: FilterTensor, shape: ConvShape) -> MapTensor:
    """Direct convolution, float64 accumulation, fixed (c, ky, kx) tap order.

    out[f, oy, ox, b] = alpha * sum over taps of in[c, oy*s - p + ky, ox*s - p + kx, b]
    * w[tap, f], with out-of-range reads contributing zero.
    """
    _check_instance(m, f, shape)
    s, p, sk = shape.stride, shape.pad, shape.sk
    wo, ho = shape.wo, shape.ho

    padded = np.zeros(
        (shape.nc, shape.hi + 2 * p, shape.wi + 2 * p, shape.nb), dtype=np.float64
    )
    padded[:, p:p + shape.hi, p:p + shape.wi, :] = m.array
    weights = f.array.astype(np.float64)

    acc = np.zeros((shape.no, ho, wo, shape.nb), dtype=np.float64)
    term = np.empty_like(acc)
    r = 0
    for c in range(shape.nc):
        for ky in range(sk):
            for kx in range(sk):
                window = padded[c, ky:ky + ho * s:s, kx:kx + wo * s:s, :]
                np.multiply(weights[r][:, None, None, None], window[None], out=term)
                acc += term
                r += 1
    acc *= float(shape.alpha)
    return MapTensor(acc.astype(np.float32))


def conv_reference_instrumented(
    m: MapTensor, f: FilterTensor, shape: ConvShape
) -> tuple[MapTensor, int, int]:
    """Scalar-loop convolution returning (output, mac_count, scale_count).

    Counts are incremented as the operations run, not computed from the
    dimensions. Only usable on small shapes.
    """
    _check_instance(m, f, shape)
    s, p, sk = shape.stride, shape.pad, shape.sk
    wo, ho = shape.wo, shape.ho
    x = m.array
    w = f.array
    out = np.zeros((shape.no, ho, wo, shape.nb), dtype=np.float32)
    macs = 0
    scales = 0
    for fi in range(shape.no):
        for oy in range(ho):
            for ox in range(wo):
                for b in range(shape.nb):
                    acc = 0.0
                    r = 0
                    for c in range(shape.nc):
                        for ky in range(sk):
                            for kx in range(sk):
                                iy = oy * s - p + ky
                                ix = ox * s - p + kx
                                if 0 <= iy < shape.hi and 0 <= ix < shape.wi:
                                    acc += float(x[c, iy, ix, b]) * float(w[r, fi])
                                else:
                                    acc += 0.0
                                macs += 1
                                r += 1
                    out[fi, oy, ox, b] = shape.alpha * acc
                    scales += 1
    return MapTensor(out), macs, scales


def im2col_explicit(m: MapTensor, shape: ConvShape, ox: int, oy: int) -> np.ndarray:
    """The unrolled (nb, k) input patch feeding output pixel (ox, oy).

    Row b, column i holds the input value of tap i (enumerated c, ky, kx) for
    batch element b; out-of-range taps are zero. Multiplying by the filter
    matrix and scaling by alpha reproduces conv_reference at that pixel.
    """
    if not (0 <= ox < shape.wo and 0 <= oy < shape.ho):
        raise ValueError(
            f"output pixel ({ox}, {oy}) outside {shape.wo}x{shape.ho} output map"
        )
    s, p, sk = shape.stride, shape.pad, shape.sk
    patch = np.zeros((shape.nb, shape.k), dtype=np.float32)
    i = 0
    for c in range(shape.nc):
        for ky in range(sk):
            iy = oy * s - p + ky
            for kx in range(sk):
                ix = ox * s - p + kx
                if 0 <= iy < shape.hi and 0 <= ix < shape.wi:
                    patch[:, i] = m.array[c, iy, ix, :]
                i += 1
    return patch
