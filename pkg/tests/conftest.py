"""Shared fixtures and the test-side convolution oracle.

The oracle here is deliberately a different formulation from anything in the
package: it pads with np.pad, slices one patch per output pixel, and
contracts it with einsum in float64. Library kernels are judged against it;
it never shares their code paths.
"""
from __future__ import annotations

import numpy as np
import pytest

from gatherconv import ConvShape, FilterTensor, MapTensor


def oracle_conv(m: MapTensor, f: FilterTensor, shape: ConvShape) -> np.ndarray:
    """Patch-slice einsum convolution, float64. Returns (no, ho, wo, nb)."""
    s, p, sk = shape.stride, shape.pad, shape.sk
    x = np.pad(
        m.array.astype(np.float64),
        ((0, 0), (p, p), (p, p), (0, 0)),
    )
    w4 = f.array.astype(np.float64).reshape(shape.nc, sk, sk, shape.no)
    out = np.empty((shape.no, shape.ho, shape.wo, shape.nb), dtype=np.float64)
    for oy in range(shape.ho):
        for ox in range(shape.wo):
            patch = x[:, oy * s:oy * s + sk, ox * s:ox * s + sk, :]
            out[:, oy, ox, :] = np.einsum("cyxb,cyxf->fb", patch, w4)
    return shape.alpha * out


def random_instance(rng, shape: ConvShape) -> tuple[MapTensor, FilterTensor]:
    m = rng.uniform(-1.0, 1.0, (shape.nc, shape.hi, shape.wi, shape.nb)).astype(np.float32)
    w = rng.uniform(-1.0, 1.0, (shape.k, shape.no)).astype(np.float32)
    return MapTensor(m), FilterTensor(w, nc=shape.nc, sk=shape.sk)


def random_small_shape(rng, max_dim: int = 16) -> ConvShape:
    """Sample the randomized-property domain: dims <= max_dim,
    sk in {1,3,5,11}, stride in {1,2,4}, pad in 0..3."""
    while True:
        sk = int(rng.choice([1, 3, 5, 11]))
        stride = int(rng.choice([1, 2, 4]))
        pad = int(rng.integers(0, 4))
        wi = int(rng.integers(1, max_dim + 1))
        hi = int(rng.integers(1, max_dim + 1))
        if wi + 2 * pad < sk or hi + 2 * pad < sk:
            continue
        return ConvShape(
            nb=int(rng.integers(1, max_dim + 1)),
            wi=wi,
            hi=hi,
            nc=int(rng.integers(1, 5 if sk == 11 else max_dim + 1)),
            no=int(rng.integers(1, max_dim + 1)),
            sk=sk,
            stride=stride,
            pad=pad,
            alpha=float(rng.choice([1.0, 1.0, 2.0, 0.5])),
        )


def rel_linf(got: np.ndarray, ref: np.ndarray) -> float:
    denom = float(np.max(np.abs(ref)))
    diff = float(np.max(np.abs(got.astype(np.float64) - ref.astype(np.float64))))
    return diff / denom if denom > 0 else diff


@pytest.fixture
def rng():
    return np.random.default_rng(20240217)
