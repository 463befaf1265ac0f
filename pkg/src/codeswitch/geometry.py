"""Grid geometry shared by layout search and circuit synthesis.

Cells are (row, col) tuples on a 4-nearest-neighbor grid.  The two core
primitives are shortest free paths (communication channels for remote CX
gates) and bridge trees (the ancilla trees that collect one stabilizer's
parity through its flag qubits).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

Cell = tuple[int, int]

# Translation order fixed as (up, down, left, right); also the BFS neighbor
# order, which pins all shortest-path tie-breaks.
STEPS: dict[str, Cell] = {
    "up": (-1, 0),
    "down": (1, 0),
    "left": (0, -1),
    "right": (0, 1),
    "nop": (0, 0),
}
NEIGHBOR_ORDER = ("up", "down", "left", "right")


def neighbors(cell: Cell):
    r, c = cell
    for name in NEIGHBOR_ORDER:
        dr, dc = STEPS[name]
        yield (r + dr, c + dc)


def adjacent(a: Cell, b: Cell) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def bfs_free_path(
    a: Cell,
    b: Cell,
    blocked: frozenset[Cell] | set[Cell],
    bounds: tuple[int, int, int, int] | None = None,
) -> list[Cell] | None:
    """Shortest path of free interior cells from ``a`` to ``b``.

    Endpoints are the (occupied) qubits themselves; the returned list holds
    only the interior cells, so adjacent endpoints give ``[]``.  ``bounds``
    is (min_row, min_col, max_row, max_col) inclusive; by default the search
    box is the endpoints' bounding box padded by a wide margin.  Returns
    None when no uninterrupted path exists.
    """
    if a == b:
        raise ValueError("endpoints must differ")
    if adjacent(a, b):
        return []
    if bounds is None:
        pad = 2 + manhattan(a, b)
        bounds = (
            min(a[0], b[0]) - pad,
            min(a[1], b[1]) - pad,
            max(a[0], b[0]) + pad,
            max(a[1], b[1]) + pad,
        )
    rmin, cmin, rmax, cmax = bounds

    def inside(cell: Cell) -> bool:
        return rmin <= cell[0] <= rmax and cmin <= cell[1] <= cmax

    parent: dict[Cell, Cell] = {}
    frontier = [a]
    seen = {a}
    while frontier:
        nxt = []
        for cur in frontier:
            for nb in neighbors(cur):
                if nb == b:
                    path = []
                    while cur != a:
                        path.append(cur)
                        cur = parent[cur]
                    return list(reversed(path))
                if nb in seen or nb in blocked or not inside(nb):
                    continue
                seen.add(nb)
                parent[nb] = cur
                nxt.append(nb)
        frontier = nxt
    return None


def ghz_len(a: Cell, b: Cell, blocked) -> float:
    """Length of the shortest uninterrupted GHZ path (inf if none)."""
    path = bfs_free_path(a, b, blocked)
    return float("inf") if path is None else float(len(path))


@dataclass
class StabTree:
    """Bridge tree of one stabilizer measurement.

    ``root`` is the parity cell; ``internal`` lists flag and bridge cells in
    BFS order from the root; ``parent`` maps every non-root tree node to its
    parent; ``data_parent`` maps each data cell to the tree node collecting
    it.  Physical CX cost is one per data qubit plus two per internal node
    (each internal node opens and closes against its parent).
    """

    root: Cell
    internal: list[Cell]
    parent: dict[Cell, Cell]
    data_parent: dict[Cell, Cell]
    flags: list[Cell] = field(default_factory=list)

    @property
    def cx_cost(self) -> int:
        return len(self.data_parent) + 2 * len(self.internal)

    def validate(self) -> None:
        nodes = {self.root, *self.internal}
        for node in self.internal:
            p = self.parent[node]
            if p not in nodes or not adjacent(node, p):
                raise ValueError(f"internal node {node} detached from tree")
        for d, p in self.data_parent.items():
            if p not in nodes or not adjacent(d, p):
                raise ValueError(f"data {d} not adjacent to its collector {p}")
        for f in self.flags:
            if f not in self.internal:
                raise ValueError(f"required flag {f} missing from tree")


def _order_internal(root: Cell, nodes: set[Cell]) -> tuple[list[Cell], dict[Cell, Cell]] | None:
    """BFS the induced subgraph on {root} | nodes; None if disconnected."""
    order: list[Cell] = []
    parent: dict[Cell, Cell] = {}
    seen = {root}
    frontier = [root]
    while frontier:
        nxt = []
        for cur in frontier:
            for nb in neighbors(cur):
                if nb in nodes and nb not in seen:
                    seen.add(nb)
                    parent[nb] = cur
                    order.append(nb)
                    nxt.append(nb)
        frontier = nxt
    if len(order) != len(nodes):
        return None
    return order, parent


def _try_tree(
    data: list[Cell], root: Cell, internal: set[Cell]
) -> StabTree | None:
    ordered = _order_internal(root, internal)
    if ordered is None:
        return None
    order, parent = ordered
    collectors = [root] + order
    data_parent: dict[Cell, Cell] = {}
    for d in data:
        for col in collectors:
            if adjacent(d, col):
                data_parent[d] = col
                break
        else:
            return None
    return StabTree(root=root, internal=order, parent=parent,
                    data_parent=data_parent)


def build_stab_tree(
    data: list[Cell],
    parity: Cell,
    flags: list[Cell],
    free: set[Cell] | frozenset[Cell],
    max_bridges: int = 4,
) -> StabTree | None:
    """Minimum-CX bridge tree rooted at ``parity`` through all ``flags``.

    Extra bridge cells are drawn from ``free``; the number of bridges is
    minimized (the data count and flag count are fixed), trying candidate
    sets in a deterministic order.  Returns None when nothing connects
    within ``max_bridges`` extra cells.
    """
    base = set(flags)
    direct = _try_tree(data, parity, base)
    if direct is not None:
        direct.flags = list(flags)
        return direct
    # Candidate bridges: free cells near the stabilizer's footprint.
    foot = [parity, *flags, *data]
    rmin = min(c[0] for c in foot) - 1
    rmax = max(c[0] for c in foot) + 1
    cmin = min(c[1] for c in foot) - 1
    cmax = max(c[1] for c in foot) + 1
    cands = sorted(
        c for c in free if rmin <= c[0] <= rmax and cmin <= c[1] <= cmax
    )
    for n_bridge in range(1, max_bridges + 1):
        for combo in itertools.combinations(cands, n_bridge):
            tree = _try_tree(data, parity, base | set(combo))
            if tree is not None:
                tree.flags = list(flags)
                return tree
    return None
