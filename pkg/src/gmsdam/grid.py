"""Structured fine and coarse grids on the unit square.

Node numbering is lexicographic with the x1 index running fastest:
node ``(i, j)`` has index ``j * (nx + 1) + i`` and lies at ``(i / nx, j / ny)``.
Element ``(i, j)`` has index ``j * nx + i`` and its corners are listed
counter-clockwise starting from the lower-left node.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class Tag(str, enum.Enum):
    WATER = "gamma_a"       # Dirichlet head data
    SEEPAGE = "gamma_0"     # air contact, p <= 0 with nonnegative outflow
    IMPERVIOUS = "gamma"    # zero total flux

    @classmethod
    def parse(cls, value: "str | Tag") -> "Tag":
        if isinstance(value, Tag):
            return value
        aliases = {"a": cls.WATER, "water": cls.WATER, "0": cls.SEEPAGE,
                   "seepage": cls.SEEPAGE, "air": cls.SEEPAGE,
                   "impervious": cls.IMPERVIOUS}
        key = str(value).strip().lower()
        for tag in cls:
            if key == tag.value:
                return tag
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown boundary tag {value!r}")


SIDES = ("bottom", "right", "top", "left")


@dataclass(frozen=True)
class BoundaryPartition:
    """Tagging of the four sides of the unit square.

    ``segments[side]`` is a tuple of ``(lo, hi, tag)`` closed intervals in the
    coordinate running along that side (x1 for bottom/top, x2 for left/right).
    ``heads[side]`` gives the water level ``h`` used for the Dirichlet data
    ``p = h - x2`` on water-tagged edges of that side.
    """

    segments: dict
    heads: dict = field(default_factory=dict)

    @classmethod
    def dam(cls, h_left: float = 3 / 5, h_right: float = 2 / 5) -> "BoundaryPartition":
        """Rectangular dam: water up to the given heads on the lateral sides."""
        for h in (h_left, h_right):
            if not 0.0 <= h <= 1.0:
                raise ValueError(f"head {h} outside [0, 1]")

        def lateral(h):
            segs = []
            if h > 0:
                segs.append((0.0, h, Tag.WATER))
            if h < 1:
                segs.append((h, 1.0, Tag.SEEPAGE))
            return tuple(segs)

        return cls(
            segments={
                "bottom": ((0.0, 1.0, Tag.IMPERVIOUS),),
                "right": lateral(h_right),
                "top": ((0.0, 1.0, Tag.SEEPAGE),),
                "left": lateral(h_left),
            },
            heads={"left": h_left, "right": h_right},
        )

    @classmethod
    def submerged(cls, head: float = 1.0) -> "BoundaryPartition":
        """Both lateral sides and the top under water; impervious bottom."""
        return cls(
            segments={
                "bottom": ((0.0, 1.0, Tag.IMPERVIOUS),),
                "right": ((0.0, 1.0, Tag.WATER),),
                "top": ((0.0, 1.0, Tag.WATER),),
                "left": ((0.0, 1.0, Tag.WATER),),
            },
            heads={"left": head, "right": head, "top": head},
        )

    def tag_at(self, side: str, s: float) -> Tag:
        hits = [Tag.parse(tag) for lo, hi, tag in self.segments[side] if lo <= s <= hi]
        if not hits:
            raise ValueError(f"point {s} on side {side!r} is not covered by the partition")
        # Dirichlet wins at junctions.
        return Tag.WATER if Tag.WATER in hits else hits[0]

    def head(self, side: str) -> float:
        try:
            return self.heads[side]
        except KeyError:
            raise ValueError(f"side {side!r} has water edges but no head") from None


@dataclass(frozen=True)
class FineMesh:
    nx: int
    ny: int
    partition: BoundaryPartition = field(default_factory=BoundaryPartition.dam)

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise ValueError(f"element counts must be positive integers, got {self.nx}x{self.ny}")

    @property
    def hx(self) -> float:
        return 1.0 / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    def node(self, i, j):
        return np.asarray(j) * (self.nx + 1) + np.asarray(i)

    @cached_property
    def coords(self) -> np.ndarray:
        """(n_nodes, 2) array of node coordinates."""
        j, i = np.divmod(np.arange(self.n_nodes), self.nx + 1)
        return np.column_stack([i / self.nx, j / self.ny])

    @cached_property
    def elements(self) -> np.ndarray:
        """(n_elements, 4) connectivity, counter-clockwise from lower left."""
        j, i = np.divmod(np.arange(self.n_elements), self.nx)
        n0 = self.node(i, j)
        return np.column_stack([n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1])

    @cached_property
    def centroids(self) -> np.ndarray:
        j, i = np.divmod(np.arange(self.n_elements), self.nx)
        return np.column_stack([(i + 0.5) * self.hx, (j + 0.5) * self.hy])

    @cached_property
    def boundary_edges(self) -> "BoundaryEdges":
        nodes, sides, elems, mids = [], [], [], []
        nx, ny = self.nx, self.ny
        i = np.arange(nx)
        j = np.arange(ny)
        # bottom, right, top, left (each oriented by increasing coordinate)
        nodes.append(np.column_stack([self.node(i, 0), self.node(i + 1, 0)]))
        elems.append(i)
        mids.append((i + 0.5) / nx)
        sides += ["bottom"] * nx
        nodes.append(np.column_stack([self.node(nx, j), self.node(nx, j + 1)]))
        elems.append(j * nx + nx - 1)
        mids.append((j + 0.5) / ny)
        sides += ["right"] * ny
        nodes.append(np.column_stack([self.node(i, ny), self.node(i + 1, ny)]))
        elems.append((ny - 1) * nx + i)
        mids.append((i + 0.5) / nx)
        sides += ["top"] * nx
        nodes.append(np.column_stack([self.node(0, j), self.node(0, j + 1)]))
        elems.append(j * nx)
        mids.append((j + 0.5) / ny)
        sides += ["left"] * ny

        mids = np.concatenate(mids)
        tags = np.array([self.partition.tag_at(s, m).value for s, m in zip(sides, mids)])
        sides = np.array(sides)
        lengths = np.where(np.isin(sides, ("bottom", "top")), self.hx, self.hy)
        return BoundaryEdges(
            nodes=np.concatenate(nodes),
            side=sides,
            tag=tags,
            element=np.concatenate(elems),
            length=lengths,
        )

    def boundary_nodes(self, tag) -> np.ndarray:
        """Sorted fine nodes incident to at least one edge carrying ``tag``."""
        tag = Tag.parse(tag)
        be = self.boundary_edges
        return np.unique(be.nodes[be.mask(tag)].ravel())

    def dirichlet_data(self) -> tuple[np.ndarray, np.ndarray]:
        """Water-tagged nodes and their prescribed pressure ``h - x2``."""
        be = self.boundary_edges
        water = be.mask(Tag.WATER)
        values = {}
        # iterate sides in fixed order so junction values are deterministic
        for side in SIDES:
            mask = water & (be.side == side)
            if not mask.any():
                continue
            h = self.partition.head(side)
            for n in np.unique(be.nodes[mask].ravel()):
                values.setdefault(int(n), h - self.coords[n, 1])
        nodes = np.array(sorted(values), dtype=np.int64)
        return nodes, np.array([values[n] for n in nodes], dtype=float)


@dataclass(frozen=True)
class BoundaryEdges:
    nodes: np.ndarray      # (n, 2) fine node pairs
    side: np.ndarray       # side name per edge
    tag: np.ndarray        # Tag value string per edge
    element: np.ndarray    # adjacent fine element
    length: np.ndarray

    def __len__(self):
        return len(self.length)

    def mask(self, *tags) -> np.ndarray:
        return np.isin(self.tag, [Tag.parse(t).value for t in tags])


@dataclass(frozen=True)
class Neighborhood:
    """Support of one coarse node: union of the coarse cells touching it."""

    index: int
    cells: np.ndarray      # coarse cell ids
    elements: np.ndarray   # fine element ids, sorted
    nodes: np.ndarray      # fine node ids, sorted
    on_boundary: bool


@dataclass(frozen=True)
class CoarseMesh:
    fine: FineMesh
    Nx: int
    Ny: int

    def __post_init__(self):
        if self.Nx < 1 or self.Ny < 1:
            raise ValueError("coarse element counts must be positive")
        if self.fine.nx % self.Nx or self.fine.ny % self.Ny:
            raise ValueError(
                f"fine grid {self.fine.nx}x{self.fine.ny} does not nest in "
                f"coarse grid {self.Nx}x{self.Ny}")

    @property
    def H(self) -> float:
        return 1.0 / self.Nx

    @property
    def n_nodes(self) -> int:
        return (self.Nx + 1) * (self.Ny + 1)

    @property
    def n_cells(self) -> int:
        return self.Nx * self.Ny

    @property
    def ratio(self) -> tuple[int, int]:
        """Fine elements per coarse cell in each direction."""
        return self.fine.nx // self.Nx, self.fine.ny // self.Ny

    def node_ij(self, k: int) -> tuple[int, int]:
        j, i = divmod(k, self.Nx + 1)
        return i, j

    def is_boundary_node(self, k: int) -> bool:
        i, j = self.node_ij(k)
        return i in (0, self.Nx) or j in (0, self.Ny)

    def cell_corners(self, c: int) -> np.ndarray:
        """Coarse node ids of cell ``c``, counter-clockwise from lower left."""
        j, i = divmod(c, self.Nx)
        n0 = j * (self.Nx + 1) + i
        return np.array([n0, n0 + 1, n0 + self.Nx + 2, n0 + self.Nx + 1])

    def cell_fine_elements(self, c: int) -> np.ndarray:
        rx, ry = self.ratio
        cj, ci = divmod(c, self.Nx)
        jj, ii = np.meshgrid(np.arange(cj * ry, (cj + 1) * ry),
                             np.arange(ci * rx, (ci + 1) * rx), indexing="ij")
        return (jj * self.fine.nx + ii).ravel()

    def cell_fine_nodes(self, c: int) -> np.ndarray:
        """Fine nodes of cell ``c`` in local lexicographic order."""
        rx, ry = self.ratio
        cj, ci = divmod(c, self.Nx)
        jj, ii = np.meshgrid(np.arange(cj * ry, (cj + 1) * ry + 1),
                             np.arange(ci * rx, (ci + 1) * rx + 1), indexing="ij")
        return self.fine.node(ii, jj).ravel()

    @cached_property
    def neighborhoods(self) -> list[Neighborhood]:
        out = []
        for k in range(self.n_nodes):
            i, j = self.node_ij(k)
            cells = [cj * self.Nx + ci
                     for cj in (j - 1, j) if 0 <= cj < self.Ny
                     for ci in (i - 1, i) if 0 <= ci < self.Nx]
            cells = np.array(sorted(cells))
            elems = np.unique(np.concatenate([self.cell_fine_elements(c) for c in cells]))
            nodes = np.unique(np.concatenate([self.cell_fine_nodes(c) for c in cells]))
            out.append(Neighborhood(k, cells, elems, nodes, self.is_boundary_node(k)))
        return out


def build_fine_mesh(nx: int, ny: int, partition: BoundaryPartition | None = None) -> FineMesh:
    return FineMesh(nx, ny, partition if partition is not None else BoundaryPartition.dam())


def build_coarse_mesh(fine: FineMesh, Nx: int, Ny: int) -> CoarseMesh:
    return CoarseMesh(fine, Nx, Ny)


def boundary_nodes(mesh: FineMesh, tag) -> np.ndarray:
    return mesh.boundary_nodes(tag)
