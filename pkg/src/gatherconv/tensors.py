"""Batch-innermost tensor containers and layout converters.

Maps are stored channel-height-width-batch (CHWN): the batch index varies
fastest in memory, so the values of one pixel across the whole minibatch
form a contiguous run. Filter banks are stored reduction-major with the
filter index innermost, one column per filter. Both layouts make the
batch/filter dimension the unit stride that the blocked kernel streams over.

All containers are immutable after construction and safe to share across
threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .shapes import ConvShape


def _frozen_f32(arr: np.ndarray, dims: tuple[int, ...], what: str) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float32)
    if a.shape != dims:
        if a.size != int(np.prod(dims)):
            raise ValueError(f"{what}: got {a.size} elements, expected dims {dims}")
        a = a.reshape(dims)
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MapTensor:
    """A minibatch of multi-channel 2D maps in CHWN order.

    `array` has dims (nc, h, w, nb); flattened, element (c, y, x, b) lives
    at linear index ((c*h + y)*w + x)*nb + b.
    """

    array: np.ndarray

    def __post_init__(self):
        if self.array.ndim != 4:
            raise ValueError(f"map tensor must be 4-d (nc, h, w, nb), got {self.array.shape}")
        object.__setattr__(self, "array", _frozen_f32(self.array, self.array.shape, "map"))

    @property
    def nc(self) -> int:
        return self.array.shape[0]

    @property
    def h(self) -> int:
        return self.array.shape[1]

    @property
    def w(self) -> int:
        return self.array.shape[2]

    @property
    def nb(self) -> int:
        return self.array.shape[3]

    @property
    def data(self) -> np.ndarray:
        """Flat 1-d view in the canonical linear order."""
        return self.array.reshape(-1)


@dataclass(frozen=True)
class FilterTensor:
    """A filter bank as a (k, no) matrix, filter index innermost.

    Row r holds tap r of every filter; column f holds the sk^2*nc weights of
    filter f. Rows enumerate taps with channel outermost, then kernel row,
    then kernel column — the same order the gather-offset table uses.
    """

    array: np.ndarray
    nc: int
    sk: int

    def __post_init__(self):
        if self.array.ndim != 2:
            raise ValueError(f"filter bank must be 2-d (k, no), got {self.array.shape}")
        k = self.sk * self.sk * self.nc
        if self.array.shape[0] != k:
            raise ValueError(
                f"filter bank has {self.array.shape[0]} rows, expected sk^2*nc = {k}"
            )
        object.__setattr__(self, "array", _frozen_f32(self.array, self.array.shape, "filters"))

    @property
    def k(self) -> int:
        return self.array.shape[0]

    @property
    def no(self) -> int:
        return self.array.shape[1]

    @property
    def data(self) -> np.ndarray:
        return self.array.reshape(-1)

    @classmethod
    def from_fchw(cls, weights: np.ndarray) -> "FilterTensor":
        """Build from a conventional (no, nc, ky, kx) weight array."""
        w = np.asarray(weights)
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ValueError(f"expected (no, nc, sk, sk) weights, got {w.shape}")
        no, nc, sk, _ = w.shape
        mat = w.transpose(1, 2, 3, 0).reshape(sk * sk * nc, no)
        return cls(mat, nc=nc, sk=sk)

    def to_fchw(self) -> np.ndarray:
        """Back to (no, nc, ky, kx) order."""
        return (
            self.array.reshape(self.nc, self.sk, self.sk, self.no)
            .transpose(3, 0, 1, 2)
            .copy()
        )


def zero_pad(m: MapTensor, pad: int) -> MapTensor:
    """Surround every map with a physical apron of `pad` zero pixels.

    The interior is copied bit-identically; apron entries are exactly 0.0.
    """
    if pad < 0:
        raise ValueError(f"pad must be >= 0, got {pad}")
    if pad == 0:
        return MapTensor(m.array.copy())
    nc, h, w, nb = m.array.shape
    out = np.zeros((nc, h + 2 * pad, w + 2 * pad, nb), dtype=np.float32)
    out[:, pad:pad + h, pad:pad + w, :] = m.array
    return MapTensor(out)


def crop_pad(m: MapTensor, pad: int) -> MapTensor:
    """Inverse of zero_pad: strip a `pad`-pixel border."""
    if pad == 0:
        return MapTensor(m.array.copy())
    return MapTensor(m.array[:, pad:-pad, pad:-pad, :].copy())


def to_chwn(batch_major: np.ndarray, dims: tuple[int, int, int, int] | None = None) -> MapTensor:
    """Permute a conventional (nb, nc, h, w) array into a CHWN MapTensor.

    `dims` may be given when `batch_major` arrives flat.
    """
    a = np.asarray(batch_major)
    if dims is not None:
        if a.size != int(np.prod(dims)):
            raise ValueError(f"array of {a.size} elements cannot have dims {dims}")
        a = a.reshape(dims)
    if a.ndim != 4:
        raise ValueError(f"expected 4-d (nb, nc, h, w) input, got shape {a.shape}")
    return MapTensor(np.ascontiguousarray(a.transpose(1, 2, 3, 0)))


def from_chwn(m: MapTensor) -> np.ndarray:
    """Inverse of to_chwn: back to a contiguous (nb, nc, h, w) array."""
    return np.ascontiguousarray(m.array.transpose(3, 0, 1, 2))


def map_for_shape(shape: ConvShape, values: np.ndarray) -> MapTensor:
    """Wrap `values` as the input map of `shape`, validating dims."""
    return MapTensor(_frozen_f32(values, (shape.nc, shape.hi, shape.wi, shape.nb), "map"))
