"""Finite centered boxes of the d-dimensional cubic lattice.

A box of radius n is the vertex set {-n, ..., n}^d with free boundary and
nearest-neighbor edges. Sites are flat indices under row-major (odometer)
encoding of the shifted coordinates; coordinates are derived on demand and
never stored per site, which keeps per-site memory at one integer during
cluster labeling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# Stay well under int64 so squared partial sums cannot overflow downstream.
_MAX_COUNT = 2**62


@dataclass(frozen=True)
class BoxLattice:
    """Immutable geometry of the box {-n..n}^d.

    Edges join nearest neighbors inside the box and are enumerated
    lexicographically by (site index, axis). That order is a pure function
    of (d, n), so edge indices mean the same thing across runs, platforms,
    and worker counts.
    """

    d: int
    n: int
    side: int
    site_count: int
    edge_count: int
    edge_u: np.ndarray = field(repr=False, compare=False)
    edge_v: np.ndarray = field(repr=False, compare=False)
    boundary_sites: np.ndarray = field(repr=False, compare=False)
    strides: tuple[int, ...] = field(repr=False, compare=False)

    @property
    def origin(self) -> int:
        """Flat index of the center site (all coordinates zero)."""
        return (self.site_count - 1) // 2

    def index_of(self, coords: Sequence[int]) -> int:
        """Flat index of a site given centered coordinates in [-n, n]^d."""
        if len(coords) != self.d:
            raise ValueError(f"expected {self.d} coordinates, got {len(coords)}")
        idx = 0
        for c, stride in zip(coords, self.strides):
            if not -self.n <= c <= self.n:
                raise ValueError(f"coordinate {c} outside [-{self.n}, {self.n}]")
            idx += (c + self.n) * stride
        return idx

    def site_of(self, index: int) -> tuple[int, ...]:
        """Centered coordinates of a flat site index."""
        if not 0 <= index < self.site_count:
            raise ValueError(f"site index {index} outside [0, {self.site_count})")
        return tuple((index // stride) % self.side - self.n for stride in self.strides)


def build_box(d: int, n: int) -> BoxLattice:
    """Construct the box lattice of dimension d and radius n.

    Refuses boxes whose site count would not fit comfortably in an int64
    index space.
    """
    if not isinstance(d, int) or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"radius must be a non-negative integer, got {n!r}")
    side = 2 * n + 1
    if side**d > _MAX_COUNT:
        raise ValueError(f"box side {side}^{d} exceeds the supported index range")
    site_count = side**d
    strides = tuple(side ** (d - 1 - axis) for axis in range(d))

    sites = np.arange(site_count, dtype=np.int64)
    coords = (sites[:, None] // np.asarray(strides, dtype=np.int64)[None, :]) % side

    # Row-major ravel of the (site, axis) mask yields the lexicographic
    # (site index, axis) edge order.
    has_edge = coords < side - 1
    edge_u = np.broadcast_to(sites[:, None], (site_count, d))[has_edge]
    edge_v = (sites[:, None] + np.asarray(strides, dtype=np.int64)[None, :])[has_edge]
    edge_count = int(edge_u.shape[0])
    expected = d * (2 * n) * side ** (d - 1)
    if edge_count != expected:
        raise AssertionError(f"edge enumeration produced {edge_count}, expected {expected}")

    on_face = (coords == 0) | (coords == side - 1)
    boundary_sites = sites[on_face.any(axis=1)]

    edge_u.setflags(write=False)
    edge_v.setflags(write=False)
    boundary_sites.setflags(write=False)
    return BoxLattice(
        d=d,
        n=n,
        side=side,
        site_count=site_count,
        edge_count=edge_count,
        edge_u=edge_u,
        edge_v=edge_v,
        boundary_sites=boundary_sites,
        strides=strides,
    )


def inner_window(lattice: BoxLattice, margin: int) -> np.ndarray:
    """Sorted flat indices of the concentric sub-box of radius n - margin."""
    if not isinstance(margin, int) or margin < 0:
        raise ValueError(f"margin must be a non-negative integer, got {margin!r}")
    if margin > lattice.n:
        raise ValueError(f"margin {margin} exceeds box radius {lattice.n}")
    if margin == 0:
        return np.arange(lattice.site_count, dtype=np.int64)
    sites = np.arange(lattice.site_count, dtype=np.int64)
    keep = np.ones(lattice.site_count, dtype=bool)
    lo, hi = margin, lattice.side - 1 - margin
    for stride in lattice.strides:
        c = (sites // stride) % lattice.side
        keep &= (c >= lo) & (c <= hi)
    return sites[keep]


def window_site_count(lattice: BoxLattice, margin: int) -> int:
    """Number of sites in the inner window of the given margin."""
    if not 0 <= margin <= lattice.n:
        raise ValueError(f"margin {margin} outside [0, {lattice.n}]")
    return (2 * (lattice.n - margin) + 1) ** lattice.d
