"""The benchmark layer catalog: Alexnet v.2 conv1-conv5 and Overfeat L1-L5.

Ten forward-convolution layer shapes at minibatch 128, the standard set for
comparing convolution kernels. Strides and pads are the unique (or minimal)
values that reproduce each layer's published output dims under the floor
output-size convention; Alexnet conv1 admits pad 2 or 3, and 2 is used.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .shapes import ConvShape

DEFAULT_MINIBATCH = 128


@dataclass(frozen=True)
class LayerCatalogEntry:
    network: str
    layer: str
    shape: ConvShape

    @property
    def name(self) -> str:
        return f"{self.network}/{self.layer}"


# (network, layer, wi, hi, nc, no, sk, stride, pad)
_CATALOG_ROWS = (
    ("alexnet", "conv1", 224, 224, 3, 64, 11, 4, 2),
    ("alexnet", "conv2", 27, 27, 64, 192, 5, 1, 2),
    ("alexnet", "conv3", 13, 13, 192, 384, 3, 1, 1),
    ("alexnet", "conv4", 13, 13, 384, 256, 3, 1, 1),
    ("alexnet", "conv5", 13, 13, 256, 256, 3, 1, 1),
    ("overfeat", "L1", 231, 231, 3, 96, 11, 4, 0),
    ("overfeat", "L2", 24, 24, 96, 256, 5, 1, 0),
    ("overfeat", "L3", 12, 12, 256, 512, 3, 1, 1),
    ("overfeat", "L4", 12, 12, 512, 1024, 3, 1, 1),
    ("overfeat", "L5", 12, 12, 1024, 1024, 3, 1, 1),
)


def layer_catalog(minibatch: int = DEFAULT_MINIBATCH) -> list[LayerCatalogEntry]:
    """The built-in ten-layer catalog, optionally at a different minibatch."""
    entries = []
    for network, layer, wi, hi, nc, no, sk, stride, pad in _CATALOG_ROWS:
        shape = ConvShape(
            nb=minibatch, wi=wi, hi=hi, nc=nc, no=no, sk=sk,
            stride=stride, pad=pad, alpha=1.0,
        )
        entries.append(LayerCatalogEntry(network, layer, shape))
    return entries


def find_layer(name: str, catalog: list[LayerCatalogEntry] | None = None) -> LayerCatalogEntry:
    """Look up an entry by its "network/layer" name."""
    for entry in catalog if catalog is not None else layer_catalog():
        if entry.name == name:
            return entry
    raise KeyError(f"no catalog layer named {name!r}")


def catalog_to_json(entries: list[LayerCatalogEntry]) -> str:
    """Canonical JSON text for a catalog (the shipped file's exact format)."""
    rows = [
        {
            "network": e.network,
            "layer": e.layer,
            "nb": e.shape.nb,
            "wi": e.shape.wi,
            "hi": e.shape.hi,
            "nc": e.shape.nc,
            "no": e.shape.no,
            "sk": e.shape.sk,
            "stride": e.shape.stride,
            "pad": e.shape.pad,
        }
        for e in entries
    ]
    return json.dumps(rows, indent=2) + "\n"


def load_catalog(path: str | Path) -> list[LayerCatalogEntry]:
    """Load a catalog from a JSON file of {network, layer, nb, wi, hi, nc, no, sk, stride, pad} rows."""
    rows = json.loads(Path(path).read_text())
    entries = []
    for row in rows:
        shape = ConvShape(
            nb=row["nb"], wi=row["wi"], hi=row["hi"], nc=row["nc"], no=row["no"],
            sk=row["sk"], stride=row["stride"], pad=row["pad"], alpha=1.0,
        )
        entries.append(LayerCatalogEntry(row["network"], row["layer"], shape))
    return entries


def default_catalog_bytes() -> bytes:
    """Raw bytes of the shipped default catalog file."""
    return resources.files("gatherconv.data").joinpath("layer_catalog.json").read_bytes()
