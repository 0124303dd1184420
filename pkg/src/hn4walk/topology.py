"""Integer geometry of the search graph.

The lattice is a periodic square grid of side L = 2**n.  Every row and every
column additionally carries degree-4 hierarchical long-range edges: a 1-based
line coordinate x in [1, 2**n] factors uniquely as x = 2**i * (2*j + 1), and
the exponent i (the 2-adic valuation) is the coordinate's hierarchy level
while j is its rank within that level.  Sites at level i <= n - 2 have
long-range edges to the neighbouring ranks j - 1 and j + 1 of their own
level, with rank arithmetic closed cyclically so the induced shift is a
bijection.  The two sites at levels n - 1 and n (x = L/2 and x = L) have no
long-range partner; their long-range edges degenerate to undirected
self-loops, which makes them "exceptional".

Amplitudes elsewhere in the package are stored against 0-based grid
coordinates (x in [0, L - 1]); the hierarchy map always applies to x + 1.
Everything here is pure integer arithmetic and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "TopologyError",
    "TopologyParams",
    "HierCoord",
    "GridVertex",
    "EXCEPTIONAL_POLICIES",
    "rank_limit",
    "level_size",
    "decompose",
    "compose",
    "grid_neighbor",
    "long_range_neighbor",
    "is_exceptional_coordinate",
    "is_exceptional",
    "admissible_vertices",
    "vertex_index",
]

#: Supported classifications of exceptional vertices.  "line" flags a vertex
#: when either of its coordinates sits on an exceptional level; the stricter
#: "intersection" requires both.
EXCEPTIONAL_POLICIES = ("line", "intersection")


class TopologyError(ValueError):
    """Out-of-range coordinate or malformed lattice parameter."""


class HierCoord(NamedTuple):
    """Hierarchy address (level, rank) of a 1-based line coordinate."""

    level: int
    rank: int


class GridVertex(NamedTuple):
    """0-based grid vertex; the linear storage index is x + L * y."""

    x: int
    y: int


@dataclass(frozen=True)
class TopologyParams:
    """Lattice geometry: side 2**n, vertex count 4**n.

    n >= 2 so that at least one hierarchy level carries moving long-range
    edges (levels 0 .. n - 2 must be non-empty).
    """

    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 2:
            raise TopologyError(f"line exponent n must be an integer >= 2, got {self.n!r}")

    @classmethod
    def from_side(cls, side: int) -> "TopologyParams":
        """Build parameters from the grid side, which must be a power of two >= 4."""
        if not isinstance(side, int) or side < 4 or side & (side - 1):
            raise TopologyError(f"side must be a power of two >= 4, got {side!r}")
        return cls(side.bit_length() - 1)

    @property
    def side(self) -> int:
        return 1 << self.n

    @property
    def n_vertices(self) -> int:
        return 1 << (2 * self.n)


def rank_limit(level: int, n: int) -> int:
    """Largest admissible rank j at a hierarchy level: 2**(n-level-1) - 1, or 0 at level n."""
    if not 0 <= level <= n:
        raise TopologyError(f"level must lie in [0, {n}], got {level}")
    if level == n:
        return 0
    return (1 << (n - level - 1)) - 1


def level_size(level: int, n: int) -> int:
    """Number of line coordinates at a hierarchy level."""
    return rank_limit(level, n) + 1


def decompose(coord: int, n: int) -> HierCoord:
    """Split a 1-based line coordinate into its hierarchy address.

    The level is the 2-adic valuation of coord and the rank is the position
    of its odd part: coord = 2**level * (2*rank + 1).
    """
    if not 1 <= coord <= (1 << n):
        raise TopologyError(f"coordinate must lie in [1, {1 << n}], got {coord}")
    level = (coord & -coord).bit_length() - 1
    rank = ((coord >> level) - 1) >> 1
    return HierCoord(level, rank)


def compose(coord: HierCoord | tuple[int, int], n: int) -> int:
    """Inverse of :func:`decompose`: map (level, rank) back to 2**level * (2*rank + 1)."""
    level, rank = coord
    limit = rank_limit(level, n)
    if not 0 <= rank <= limit:
        raise TopologyError(f"rank must lie in [0, {limit}] at level {level}, got {rank}")
    return (1 << level) * (2 * rank + 1)


def grid_neighbor(coord: int, step: int, side: int) -> int:
    """Periodic nearest neighbour of a 0-based grid coordinate."""
    if step not in (1, -1):
        raise TopologyError(f"step must be +1 or -1, got {step}")
    if not 0 <= coord < side:
        raise TopologyError(f"coordinate must lie in [0, {side - 1}], got {coord}")
    return (coord + step) % side


def long_range_neighbor(coord: int, step: int, n: int) -> int:
    """Long-range neighbour of a 1-based line coordinate.

    Moves to the cyclically adjacent rank of the coordinate's own hierarchy
    level; the level never changes.  At the exceptional levels n - 1 and n
    the edge is a self-loop, so the coordinate is returned unchanged.
    """
    if step not in (1, -1):
        raise TopologyError(f"step must be +1 or -1, got {step}")
    level, rank = decompose(coord, n)
    if level >= n - 1:
        return coord
    size = level_size(level, n)
    return compose(HierCoord(level, (rank + step) % size), n)


def is_exceptional_coordinate(coord: int, n: int) -> bool:
    """True when the 0-based coordinate's 1-based image sits at level n - 1 or n."""
    return decompose(coord + 1, n).level >= n - 1


def is_exceptional(vertex: GridVertex | tuple[int, int], n: int, policy: str = "line") -> bool:
    """Classify a vertex as exceptional under the given policy.

    Exceptional vertices have degenerate (self-loop) long-range edges on at
    least one line through them.  Policy "line" flags a vertex when either
    coordinate is exceptional; "intersection" only when both are.
    """
    if policy not in EXCEPTIONAL_POLICIES:
        raise TopologyError(f"unknown exceptional policy {policy!r}")
    x, y = vertex
    ex_x = is_exceptional_coordinate(x, n)
    ex_y = is_exceptional_coordinate(y, n)
    if policy == "line":
        return ex_x or ex_y
    return ex_x and ex_y


def admissible_vertices(params: TopologyParams, policy: str = "line") -> tuple[GridVertex, ...]:
    """All non-exceptional vertices in linear-index order."""
    side = params.side
    return tuple(
        GridVertex(x, y)
        for y in range(side)
        for x in range(side)
        if not is_exceptional(GridVertex(x, y), params.n, policy)
    )


def vertex_index(vertex: GridVertex | tuple[int, int], side: int) -> int:
    """Linear storage index of a vertex."""
    x, y = vertex
    if not (0 <= x < side and 0 <= y < side):
        raise TopologyError(f"vertex {(x, y)} outside [0, {side - 1}]^2")
    return x + side * y
