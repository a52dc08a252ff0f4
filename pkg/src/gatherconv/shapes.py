"""Convolution hyperparameters and output geometry.

A convolution instance is fully described by a :class:`ConvShape`: minibatch
size, input map extent, channel/filter counts, square kernel side, stride,
apron padding, and the scalar applied to every output value.
"""
from __future__ import annotations

from dataclasses import dataclass


def conv_output_size(size: int, sk: int, stride: int, pad: int) -> int:
    """Output extent along one axis: floor((size + 2*pad - sk) / stride) + 1.

    Raises ValueError when the padded input is smaller than the kernel,
    since no output position exists in that case.
    """
    if size + 2 * pad < sk:
        raise ValueError(
            f"kernel side {sk} exceeds padded input extent {size + 2 * pad}"
        )
    return (size + 2 * pad - sk) // stride + 1


@dataclass(frozen=True)
class ConvShape:
    """All hyperparameters of one convolution layer.

    nb: minibatch size
    wi, hi: input map width/height in pixels
    nc: input channels
    no: number of filters (output channels)
    sk: square kernel side in pixels
    stride: convolution stride
    pad: apron width (zero border) in pixels
    alpha: scalar applied once to every output value
    """

    nb: int
    wi: int
    hi: int
    nc: int
    no: int
    sk: int
    stride: int = 1
    pad: int = 0
    alpha: float = 1.0

    def __post_init__(self):
        for name in ("nb", "wi", "hi", "nc", "no", "sk", "stride"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.pad, int) or self.pad < 0:
            raise ValueError(f"pad must be a non-negative integer, got {self.pad!r}")
        # raises if the kernel cannot be placed at all
        conv_output_size(self.wi, self.sk, self.stride, self.pad)
        conv_output_size(self.hi, self.sk, self.stride, self.pad)

    @property
    def wo(self) -> int:
        return conv_output_size(self.wi, self.sk, self.stride, self.pad)

    @property
    def ho(self) -> int:
        return conv_output_size(self.hi, self.sk, self.stride, self.pad)

    @property
    def k(self) -> int:
        """Reduction length: taps summed per output value (sk^2 * nc)."""
        return self.sk * self.sk * self.nc

    @property
    def padded_wi(self) -> int:
        return self.wi + 2 * self.pad

    @property
    def padded_hi(self) -> int:
        return self.hi + 2 * self.pad


def output_dims(shape: ConvShape) -> tuple[int, int]:
    """(wo, ho) of the output map produced by `shape`."""
    return shape.wo, shape.ho
