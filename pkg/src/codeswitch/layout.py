"""Data-qubit layout search for one changeable logical qubit.

A layout places the 15 data qubits (7 forming the Steane block, 7 mirror
partners, one connector), and assigns every stabilizer measurement a bridge
tree of parity/flag ancilla cells.  Ancilla cells are shared freely across
stabilizer families (measurements are serialized by the scheduler), but
every data qubit must keep at least one free neighbor so remote CX channels
can reach it.

Stabilizer families measured on a layout:

* ``zb1_i`` / ``xb1_i``: the three Steane checks of block one (Steane-mode
  EC; the Z versions are also Reed-Muller generators).
* ``zb2_i`` / ``xb2_i``: the same checks on block two (switch preparation;
  Z versions again RM generators).
* ``j01, j02, j12``: weight-4 joint Z checks straddling both blocks.
* ``zw3``: the weight-8 Z check on block two plus the connector.
* ``xw0..xw3``: the four weight-8 X checks.

The RM Z generators are taken as {zb1, zb2, joints, zw3}, an equivalent
generating set to the textbook one that keeps most Z checks weight-4 and
local to a block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .codes import (
    CONNECTOR,
    STEANE_N,
    rm_block2_support,
    rm_code,
    rm_joint_support,
    rm_weight8_support,
    steane_code,
    steane_support,
)
from .geometry import (
    Cell,
    STEPS,
    StabTree,
    adjacent,
    bfs_free_path,
    manhattan,
    neighbors,
)

SCHEMES = ("oecf", "ocsf", "olcf", "oel")


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class FamilyDef:
    """One stabilizer support family (its tree serves X and/or Z checks).

    ``variants`` lists equivalent supports (the measured operator times
    other group generators); tree assignment measures whichever variant of
    the same coset gives the cheapest bridge tree.
    """

    name: str
    data_indices: tuple[int, ...]
    kinds: tuple[str, ...]          # which check types use this tree
    min_internal: int               # flag-count floor (1 for w4, 3 for w8)
    weight: int
    variants: tuple[tuple[int, ...], ...] = ()

    def all_supports(self) -> tuple[tuple[int, ...], ...]:
        return (self.data_indices,) + self.variants


def _joint_variants(i: int, j: int) -> tuple[tuple[int, ...], ...]:
    """Weight-4 coset representatives of the joint Z check for bits i, j.

    Multiplying by block-local Steane Z checks moves the support pair
    within each block independently; all variants measure the same
    syndrome information.
    """
    base_b1 = [q for q in range(STEANE_N) if (q + 1) >> i & 1 and (q + 1) >> j & 1]
    parts_b1 = [tuple(base_b1)]
    for k in range(3):
        stab = set(steane_support(k))
        alt = tuple(sorted(set(base_b1) ^ stab))
        if len(alt) == 2:
            parts_b1.append(alt)
    variants = []
    for a in parts_b1:
        for b in parts_b1:
            variants.append(tuple(sorted(a)) + tuple(sorted(q + STEANE_N for q in b)))
    return tuple(variants)


def _fano_lines() -> list[tuple[int, ...]]:
    lines = []
    for a in range(1, 8):
        for b in range(a + 1, 8):
            c = a ^ b
            if c > b:
                lines.append((a - 1, b - 1, c - 1))
    return lines


def _w3_variants() -> tuple[tuple[int, ...], ...]:
    """Low-weight representatives of the block-two-plus-connector Z check.

    The full weight-8 operator equals (logical Z of block two) x (Z on the
    connector) up to block-two checks, so any Fano-line support works.
    """
    out = [tuple(rm_weight8_support(3))]
    for line in _fano_lines():
        out.append(tuple(q + STEANE_N for q in line) + (CONNECTOR,))
    return tuple(out)


def family_defs() -> list[FamilyDef]:
    fams: list[FamilyDef] = []
    for i in range(3):
        fams.append(FamilyDef(f"b1_{i}", tuple(steane_support(i)),
                              ("Z", "X"), 1, 4))
    for i in range(3):
        fams.append(FamilyDef(f"b2_{i}", tuple(rm_block2_support(i)),
                              ("Z", "X"), 1, 4))
    fams.append(FamilyDef("j01", tuple(rm_joint_support(0, 1)), ("Z",), 1, 4,
                          _joint_variants(0, 1)[1:]))
    fams.append(FamilyDef("j02", tuple(rm_joint_support(0, 2)), ("Z",), 1, 4,
                          _joint_variants(0, 2)[1:]))
    fams.append(FamilyDef("j12", tuple(rm_joint_support(1, 2)), ("Z",), 1, 4,
                          _joint_variants(1, 2)[1:]))
    fams.append(FamilyDef("w3", tuple(rm_weight8_support(3)), ("Z",), 3, 8,
                          _w3_variants()[1:]))
    for i in range(4):
        fams.append(FamilyDef(f"w8_{i}", tuple(rm_weight8_support(i)),
                              ("X",), 3, 8))
    return fams


FAMILIES = {f.name: f for f in family_defs()}

# RM error detection measures this, in canonical decoder order (Z then X).
RM_FAMILY_ORDER = [
    ("zb1_0", "b1_0", "Z"), ("zb1_1", "b1_1", "Z"), ("zb1_2", "b1_2", "Z"),
    ("zb2_0", "b2_0", "Z"), ("zb2_1", "b2_1", "Z"), ("zb2_2", "b2_2", "Z"),
    ("j01", "j01", "Z"), ("j02", "j02", "Z"), ("j12", "j12", "Z"),
    ("zw3", "w3", "Z"),
    ("xw0", "w8_0", "X"), ("xw1", "w8_1", "X"),
    ("xw2", "w8_2", "X"), ("xw3", "w8_3", "X"),
]

STEANE_FAMILY_ORDER = [
    ("zb1_0", "b1_0", "Z"), ("zb1_1", "b1_1", "Z"), ("zb1_2", "b1_2", "Z"),
    ("xb1_0", "b1_0", "X"), ("xb1_1", "b1_1", "X"), ("xb1_2", "b1_2", "X"),
]

STEANE2_FAMILY_ORDER = [
    ("zb2_0", "b2_0", "Z"), ("zb2_1", "b2_1", "Z"), ("zb2_2", "b2_2", "Z"),
    ("xb2_0", "b2_0", "X"), ("xb2_1", "b2_1", "X"), ("xb2_2", "b2_2", "X"),
]

MODE_ORDERS = {
    "steane": STEANE_FAMILY_ORDER,
    "steane2": STEANE2_FAMILY_ORDER,
    "rm": RM_FAMILY_ORDER,
}


@dataclass
class MeasureSpec:
    label: str
    kind: str
    index: int
    data_indices: list[int]
    data_cells: list[Cell]
    tree: StabTree


@dataclass
class LayoutMetrics:
    tot_cx_steane_ec: int
    tot_cx_rm_ec: int
    avg_remcx_cs: float
    avg_remcx_steane_cx: float
    avg_remcx_rm_cx: float
    phys_qubits_per_logical: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


_TREE_CACHE: dict = {}


def _tree_search(
    data: list[Cell],
    usable: set[Cell],
    min_internal: int,
    hint: tuple[Cell, tuple[Cell, ...]] | None = None,
    max_extra: int = 6,
) -> StabTree | None:
    """Deterministic minimum-cost bridge tree over ``usable`` cells.

    Tries the template hint first; otherwise grows greedy coverage trees
    from each candidate parity cell and keeps the cheapest.  Trees must
    contain at least ``min_internal`` internal nodes (flag minima).
    """
    from .geometry import _try_tree

    near_set = set()
    for d in data:
        r, c = d
        for dr in range(-4, 5):
            for dc in range(-4 + abs(dr), 5 - abs(dr)):
                cell = (r + dr, c + dc)
                if cell in usable:
                    near_set.add(cell)
    cache_key = (tuple(data), frozenset(near_set), min_internal, hint)
    cached = _TREE_CACHE.get(cache_key, "miss")
    if cached != "miss":
        return cached

    def finish(parity: Cell, internal: set[Cell]) -> StabTree | None:
        if len(internal) < min_internal:
            pads = sorted(c for c in usable
                          if c not in internal and c != parity
                          and (adjacent(c, parity)
                               or any(adjacent(c, i) for i in internal)))
            for pad in pads:
                if len(internal) >= min_internal:
                    break
                internal = internal | {pad}
        if len(internal) < min_internal:
            return None
        tree = _try_tree(data, parity, internal)
        if tree is not None:
            tree.flags = list(tree.internal)
        return tree

    best: StabTree | None = None
    if hint is not None:
        parity, internal = hint
        if parity in usable and all(c in usable for c in internal):
            tree = finish(parity, set(internal))
            if tree is not None:
                _TREE_CACHE[cache_key] = tree
                return tree

    data_set = set(data)
    near = sorted(near_set)
    covers: dict[Cell, frozenset] = {
        c: frozenset(d for d in data if adjacent(c, d)) for c in near
    }
    nbrs_in_near: dict[Cell, list[Cell]] = {
        c: [n for n in neighbors(c) if n in near_set] for c in near
    }
    parities = [c for c in near if covers[c]]
    for parity in parities:
        # Greedy cover: add the reachable cell covering the most uncovered
        # data; on zero gain, walk toward the nearest uncovered datum.
        internal: set[Cell] = set()
        covered = set(covers[parity])
        reach = set(nbrs_in_near[parity])
        ok = True
        while covered != data_set:
            uncovered = data_set - covered
            bestc = None
            for c in reach:
                if c in internal or c == parity:
                    continue
                gain = len(covers[c] & uncovered)
                dist = min(manhattan(c, d) for d in uncovered)
                key = (-gain, dist, c)
                if bestc is None or key < bestc:
                    bestc = key
            if bestc is None:
                ok = False
                break
            cell = bestc[2]
            internal.add(cell)
            covered |= covers[cell] & uncovered
            reach |= set(nbrs_in_near[cell])
            if len(internal) > len(data) + max_extra:
                ok = False
                break
        if not ok:
            continue
        tree = finish(parity, internal)
        if tree is None:
            continue
        # Prune needless leaf ancillas (flag minima re-padded in finish).
        changed = True
        while changed and len(tree.internal) > min_internal:
            changed = False
            kids: dict[Cell, int] = {c: 0 for c in tree.internal}
            for f, p in tree.parent.items():
                if p in kids:
                    kids[p] += 1
            for d, p in tree.data_parent.items():
                if p in kids:
                    kids[p] += 1
            for f in list(tree.internal):
                if kids.get(f, 0) == 0 and len(tree.internal) > min_internal:
                    t2 = _try_tree(data, parity, set(tree.internal) - {f})
                    if t2 is not None:
                        t2.flags = list(t2.internal)
                        tree = t2
                        changed = True
                        break
        if best is None or (tree.cx_cost, tree.root) < (best.cx_cost, best.root):
            best = tree
    if best is None:
        best = _pathwise_tree(data, near_set, parities, min_internal, finish)
    _TREE_CACHE[cache_key] = best
    if len(_TREE_CACHE) > 200_000:
        _TREE_CACHE.clear()
    return best


def _pathwise_tree(data, near_set, parities, min_internal, finish):
    """Fallback tree builder: BFS-connect each datum's contact to the tree."""
    data_set = set(data)
    for parity in parities:
        nodes = {parity}
        ok = True
        while True:
            covered = {d for d in data_set
                       if any(adjacent(d, c) for c in nodes)}
            missing = sorted(data_set - covered)
            if not missing:
                break
            target = missing[0]
            # BFS from tree nodes through usable cells to a contact of target.
            frontier = sorted(nodes)
            seen = set(nodes)
            parent: dict[Cell, Cell] = {}
            found = None
            while frontier and found is None:
                nxt = []
                for cur in frontier:
                    for nb in neighbors(cur):
                        if nb in seen or nb not in near_set:
                            continue
                        seen.add(nb)
                        parent[nb] = cur
                        if adjacent(nb, target):
                            found = nb
                            break
                        nxt.append(nb)
                    if found:
                        break
                frontier = sorted(nxt)
            if found is None:
                ok = False
                break
            while found not in nodes:
                nodes.add(found)
                found = parent[found]
        if not ok:
            continue
        tree = finish(parity, nodes - {parity})
        if tree is not None:
            return tree
    return None


@dataclass
class QubitLayout:
    """Placement of one logical qubit's data and ancilla cells."""

    scheme: str
    data_pos: list[Cell | None]
    trees: dict = field(default_factory=dict)
    chosen_support: dict = field(default_factory=dict)
    reserved_ports: set = field(default_factory=set)
    hints: dict[str, tuple[Cell, tuple[Cell, ...]]] = field(default_factory=dict)
    bounds: tuple[int, int, int, int] = (0, 0, 0, 0)  # rmin, cmin, rmax, cmax
    steane_only: bool = False
    mirror_base: int | None = None

    # -- occupancy ---------------------------------------------------------

    def data_cells(self) -> list[Cell]:
        return [c for c in self.data_pos if c is not None]

    def ancilla_cells(self) -> set[Cell]:
        """True ancilla cells: tree nodes that are not (borrowed) data cells."""
        cells: set[Cell] = set()
        for tree in self.trees.values():
            cells.add(tree.root)
            cells.update(tree.internal)
        return cells - set(self.data_cells())

    def occupied(self) -> frozenset[Cell]:
        return frozenset(self.data_cells()) | frozenset(self.ancilla_cells())

    def inside(self, cell: Cell) -> bool:
        rmin, cmin, rmax, cmax = self.bounds
        return rmin <= cell[0] <= rmax and cmin <= cell[1] <= cmax

    def interior_free(self) -> set[Cell]:
        occ = self.occupied()
        rmin, cmin, rmax, cmax = self.bounds
        return {(r, c) for r in range(rmin, rmax + 1)
                for c in range(cmin, cmax + 1) if (r, c) not in occ}

    def extent(self) -> tuple[int, int]:
        rmin, cmin, rmax, cmax = self.bounds
        return rmax - rmin + 1, cmax - cmin + 1

    # -- codes and measurement specs ----------------------------------------

    def code(self, mode: str):
        return steane_code() if mode in ("steane", "steane2") else rm_code()

    def mode_data(self, mode: str) -> list[Cell]:
        if mode == "steane":
            return [self.data_pos[i] for i in range(STEANE_N)]
        if mode == "steane2":
            return [self.data_pos[i + STEANE_N] for i in range(STEANE_N)]
        return list(self.data_pos)

    def tree_contexts(self) -> list[tuple[str, str]]:
        """(family, context) pairs needing a bridge tree.

        Contexts determine which idle cells a tree may borrow: Steane-mode
        trees may use block-two and connector cells (idle while only block
        one is encoded), block-two preparation trees may use the connector
        cell, and RM-mode trees borrow nothing (all 15 data are live).
        """
        if self.steane_only:
            return [(f"b1_{i}", "steane") for i in range(3)]
        out = []
        for i in range(3):
            out.append((f"b1_{i}", "steane"))
            out.append((f"b1_{i}", "rm"))
            out.append((f"b2_{i}", "steane2"))
            out.append((f"b2_{i}", "rm"))
        out += [("j01", "rm"), ("j02", "rm"), ("j12", "rm"), ("w3", "rm")]
        out += [(f"w8_{i}", "rm") for i in range(4)]
        return out

    def borrowable(self, context: str) -> set[Cell]:
        if self.steane_only:
            return set()
        q15 = self.data_pos[CONNECTOR]
        if context == "steane":
            cells = {self.data_pos[i + STEANE_N] for i in range(STEANE_N)}
            cells.add(q15)
            return {c for c in cells if c is not None}
        if context == "steane2":
            return {q15} if q15 is not None else set()
        return set()

    def measure_specs(self, mode: str) -> list[MeasureSpec]:
        specs = []
        for idx, (label, fam, kind) in enumerate(MODE_ORDERS[mode]):
            specs.append(self._spec(mode, label, fam, kind,
                                    idx % 3 if fam.startswith("b") else idx))
        return specs

    def measure_spec(self, stab_id: str) -> MeasureSpec:
        for mode in MODE_ORDERS:
            for idx, (label, fam, kind) in enumerate(MODE_ORDERS[mode]):
                if label == stab_id:
                    return self._spec(mode, label, fam, kind,
                                      idx % 3 if fam.startswith("b") else idx)
        raise LayoutError(f"unknown stabilizer id {stab_id!r}")

    def _spec(self, mode: str, label: str, fam_name: str, kind: str,
              index: int) -> MeasureSpec:
        tree = self.trees.get((fam_name, mode))
        if tree is None:
            raise LayoutError(f"no tree assigned for {fam_name} in {mode}")
        support = self.chosen_support[(fam_name, mode)]
        cells = [self.data_pos[i] for i in support]
        if any(c is None for c in cells):
            raise LayoutError(f"family {fam_name} has unplaced data")
        return MeasureSpec(label=label, kind=kind, index=index,
                           data_indices=list(support),
                           data_cells=cells, tree=tree)

    # -- ancilla assignment --------------------------------------------------

    def usable_for_trees(self) -> set[Cell]:
        """Cells trees may occupy: inside bounds, not data, not reserved.

        Every data qubit reserves one free neighbor (its channel port) so
        remote CX paths can always reach it.
        """
        rmin, cmin, rmax, cmax = self.bounds
        cells = {(r, c) for r in range(rmin, rmax + 1)
                 for c in range(cmin, cmax + 1)}
        cells -= set(self.data_cells())
        return cells

    def assign_trees(self) -> None:
        """Recompute every (family, context) bridge tree.

        Cells available to a tree: interior non-data cells plus the
        context's borrowable idle data cells.  Every data qubit must keep
        one free (non-tree) neighbor as its communication port; when an
        assignment walls a qubit in, its cheapest port cell is added to the
        forbidden set and assignment reruns.
        """
        base = self.usable_for_trees()
        data_set = set(self.data_cells())
        forbidden: set[Cell] = set(self.reserved_ports)
        for d in data_set:
            options = [c for c in neighbors(d) if c in base]
            if not options:
                raise LayoutError(f"data qubit at {d} is walled in")
            if len(options) == 1:
                forbidden.add(options[0])   # forced channel port
        for _ in range(24):
            self.trees = {}
            self.chosen_support = {}
            for fam_name, context in self.tree_contexts():
                fam = FAMILIES[fam_name]
                best = None
                for support in fam.all_supports():
                    cells = [self.data_pos[i] for i in support]
                    if any(c is None for c in cells):
                        raise LayoutError(f"family {fam_name} has unplaced data")
                    usable = (base | self.borrowable(context)) - set(cells)
                    usable -= forbidden
                    min_internal = 1 if len(support) <= 4 else 3
                    tree = _tree_search(cells, usable, min_internal,
                                        hint=self.hints.get(f"{fam_name}:{context}"))
                    if tree is None:
                        continue
                    if best is None or tree.cx_cost < best[0].cx_cost:
                        best = (tree, support)
                if best is None:
                    raise LayoutError(f"no bridge tree for {fam_name}/{context}")
                best[0].validate()
                self.trees[(fam_name, context)] = best[0]
                self.chosen_support[(fam_name, context)] = best[1]
            blocked = set()
            for tree in self.trees.values():
                blocked.add(tree.root)
                blocked.update(tree.internal)
            blocked -= data_set   # borrowed data cells stay channel-free
            walled = []
            for d in data_set:
                options = [c for c in neighbors(d) if c in base]
                if options and all(c in blocked for c in options):
                    walled.append((d, options))
            if not walled:
                self.reserved_ports = forbidden
                return
            d, options = sorted(walled)[0]
            options.sort(key=lambda c: (
                sum(1 for n in neighbors(c) if n in data_set), c))
            forbidden.add(options[0])
        raise LayoutError("could not give every data qubit a free port")
    # -- metrics ---------------------------------------------------------------

    def tot_cx(self, stab_id: str) -> int:
        return self.measure_spec(stab_id).tree.cx_cost

    def tot_cx_mode(self, mode: str) -> int:
        return sum(s.tree.cx_cost for s in self.measure_specs(mode))

    def rem_len(self, a: Cell, b: Cell, extra_occupied=frozenset()) -> float:
        blocked = (set(self.occupied()) | set(extra_occupied)) - {a, b}
        path = bfs_free_path(a, b, blocked)
        return float("inf") if path is None else len(path) + 1.0

    def switch_rem_lengths(self) -> list[float]:
        """REM-CX lengths of the 10 switching CX gates (3 connector + 7 pairs)."""
        from .codes import CONNECTOR_CX_PARTNERS

        q15 = self.data_pos[CONNECTOR]
        out = [self.rem_len(q15, self.data_pos[p]) for p in CONNECTOR_CX_PARTNERS]
        for i in range(STEANE_N):
            out.append(self.rem_len(self.data_pos[i], self.data_pos[i + STEANE_N]))
        return out

    def translated(self, dr: int, dc: int) -> "QubitLayout":
        shift = lambda c: (c[0] + dr, c[1] + dc) if c is not None else None
        new = QubitLayout(
            scheme=self.scheme,
            data_pos=[shift(c) for c in self.data_pos],
            hints={k: (shift(p), tuple(shift(i) for i in ints))
                   for k, (p, ints) in self.hints.items()},
            bounds=(self.bounds[0] + dr, self.bounds[1] + dc,
                    self.bounds[2] + dr, self.bounds[3] + dc),
            steane_only=self.steane_only,
            mirror_base=self.mirror_base,
        )
        new.chosen_support = dict(self.chosen_support)
        new.trees = {
            name: StabTree(
                root=shift(t.root),
                internal=[shift(c) for c in t.internal],
                parent={shift(k): shift(v) for k, v in t.parent.items()},
                data_parent={shift(k): shift(v) for k, v in t.data_parent.items()},
                flags=[shift(c) for c in t.flags],
            )
            for name, t in self.trees.items()
        }
        return new

    def neighbor_pitch(self, direction: str, margin: int = 1) -> tuple[int, int]:
        rows, cols = self.extent()
        if direction == "h":
            return 0, cols + margin
        if direction == "v":
            return rows + margin, 0
        raise LayoutError(direction)

    def pair_rem_lengths(self, direction: str, mode: str = "steane",
                         margin: int = 1) -> list[float]:
        dr, dc = self.neighbor_pitch(direction, margin)
        other = self.translated(dr, dc)
        occ = set(self.occupied()) | set(other.occupied())
        out = []
        for a, b in zip(self.mode_data(mode), other.mode_data(mode)):
            blocked = occ - {a, b}
            path = bfs_free_path(a, b, blocked)
            out.append(float("inf") if path is None else len(path) + 1.0)
        return out

    def metrics(self) -> LayoutMetrics:
        cs = self.switch_rem_lengths()
        st_h = self.pair_rem_lengths("h", "steane")
        st_v = self.pair_rem_lengths("v", "steane")
        rm_h = self.pair_rem_lengths("h", "rm")
        rm_v = self.pair_rem_lengths("v", "rm")
        mean = lambda xs: sum(xs) / len(xs)
        return LayoutMetrics(
            tot_cx_steane_ec=self.tot_cx_mode("steane"),
            tot_cx_rm_ec=self.tot_cx_mode("rm"),
            avg_remcx_cs=mean(cs),
            avg_remcx_steane_cx=(mean(st_h) + mean(st_v)) / 2,
            avg_remcx_rm_cx=(mean(rm_h) + mean(rm_v)) / 2,
            phys_qubits_per_logical=len(self.occupied()),
        )

    # -- serialization -----------------------------------------------------------

    def to_json(self) -> str:
        cells = []
        for i, pos in enumerate(self.data_pos):
            if pos is None:
                continue
            role = "connector" if i == CONNECTOR else "data"
            cells.append({"x": pos[1], "y": pos[0], "role": role, "index": i})
        seen = set()
        for name, tree in sorted(self.trees.items()):
            if tree.root not in seen:
                seen.add(tree.root)
                cells.append({"x": tree.root[1], "y": tree.root[0],
                              "role": "parity", "index": name})
            for j, f in enumerate(tree.internal):
                if f not in seen and f not in set(self.data_cells()):
                    seen.add(f)
                    cells.append({"x": f[1], "y": f[0], "role": "flag",
                                  "index": f"{name}:{j}"})
        rows, cols = self.extent()
        doc = {
            "scheme": self.scheme,
            "grid": {"w": cols, "h": rows},
            "cells": cells,
            "metrics": self.metrics().as_dict() if not self.steane_only else
            {"tot_cx_steane_ec": self.tot_cx_mode("steane")},
        }
        return json.dumps(doc, indent=2)

    def ascii_art(self) -> str:
        rmin, cmin, rmax, cmax = self.bounds
        grid = {}
        for tree in self.trees.values():
            grid[tree.root] = "P"
            for f in tree.internal:
                grid.setdefault(f, "F")
        for i, pos in enumerate(self.data_pos):
            if pos is not None:
                grid[pos] = "C" if i == CONNECTOR else "D"
        lines = []
        for r in range(rmin, rmax + 1):
            lines.append("".join(grid.get((r, c), ".")
                                 for c in range(cmin, cmax + 1)))
        return "\n".join(lines)


# -- search pipeline -----------------------------------------------------------

# Block-one seed: two data columns flank a central ancilla column; the
# S2-only qubit closes the bottom.  Bridge-tree costs for the three Steane
# checks come out as 6, 6, and 8 physical CX (40 per EC pass of both types).
B1_SEED: dict[int, Cell] = {
    0: (1, 1), 2: (2, 1), 1: (3, 1),
    4: (1, 3), 6: (2, 3), 5: (3, 3),
    3: (4, 2),
}


def _default_b1_seed() -> dict[int, Cell]:
    return dict(B1_SEED)


def initial_steane_layout(scheme: str = "oecf",
                          seed_data: dict[int, Cell] | None = None,
                          bounds: tuple[int, int, int, int] | None = None,
                          ) -> QubitLayout:
    """Steane-mode-only layout: 7 data qubits plus their check ancillas."""
    data = seed_data if seed_data is not None else _default_b1_seed()
    pos: list[Cell | None] = [None] * 15
    for i, cell in data.items():
        pos[i] = cell
    cells = [c for c in pos if c is not None]
    if bounds is None:
        rmin = min(c[0] for c in cells) - 1
        cmin = min(c[1] for c in cells) - 1
        rmax = max(c[0] for c in cells) + 1
        cmax = max(c[1] for c in cells) + 1
        bounds = (rmin, cmin, rmax, cmax)
    lay = QubitLayout(scheme=scheme, data_pos=pos, bounds=bounds,
                      steane_only=True)
    lay.assign_trees()
    return lay


def mirror_rm_layout(steane: QubitLayout, gap: int = 2,
                     q15: Cell | None = None) -> QubitLayout:
    """Place block two as the mirror image of block one, plus the connector.

    The mirror axis sits ``gap`` free columns to the right of block one's
    data bounding box; on collision the axis shifts outward one more column.
    """
    b1 = [steane.data_pos[i] for i in range(STEANE_N)]
    cmax = max(c[1] for c in b1)
    shift = 0
    while True:
        base = 2 * cmax + gap + 1 + shift
        b2 = [(r, base - c) for (r, c) in b1]
        if not (set(b2) & set(b1)):
            break
        shift += 1
    pos = list(steane.data_pos)
    for i, cell in enumerate(b2):
        pos[i + STEANE_N] = cell
    if q15 is None:
        rows = sorted({r for r, _ in b1})
        q15 = (rows[len(rows) // 2], cmax + 1 + gap // 2)
    pos[CONNECTOR] = q15
    if pos[CONNECTOR] in set(b1) | set(b2):
        raise LayoutError("connector collides with data")
    rmin = min(c[0] for c in pos) - 1
    cmin = min(c[1] for c in pos) - 1
    rmax = max(c[0] for c in pos) + 1
    cmax2 = max(c[1] for c in pos) + 1
    lay = QubitLayout(scheme=steane.scheme, data_pos=pos,
                      bounds=(rmin, cmin, rmax, cmax2),
                      hints=dict(steane.hints),
                      mirror_base=base)
    lay.assign_trees()
    return lay


def _family_cost_order() -> list[str]:
    """Refinement order: weight-8 families first, then weight-4."""
    fams = [f for f in FAMILIES.values()]
    fams.sort(key=lambda f: (-f.weight, f.name))
    return [f.name for f in fams]


def _try_data_move(layout: QubitLayout, indices: list[int],
                   delta: Cell) -> QubitLayout | None:
    """Translate the given data qubits; None on collision/out-of-bounds."""
    moved = list(layout.data_pos)
    targets = set()
    for i in indices:
        cell = moved[i]
        new = (cell[0] + delta[0], cell[1] + delta[1])
        if not layout.inside(new):
            return None
        moved[i] = new
        targets.add(new)
    others = {c for j, c in enumerate(moved)
              if j not in indices and c is not None}
    if targets & others:
        return None
    new_lay = replace(layout, data_pos=moved, trees={}, hints=dict(layout.hints))
    try:
        new_lay.assign_trees()
    except LayoutError:
        return None
    return new_lay


def refine_ec(layout: QubitLayout, sweeps: int = 2) -> QubitLayout:
    """Greedy per-stabilizer translations minimizing that check's CX cost.

    Weight-8 families move first; a move is kept only when its own cost
    strictly drops and the total cost over all checks does not increase.
    Runs exactly ``sweeps`` sweeps.
    """
    cur = layout
    for _ in range(sweeps):
        for name in _family_cost_order():
            fam = FAMILIES[name]
            total_before = sum(t.cx_cost for t in cur.trees.values())
            own_before = cur.trees[name].cx_cost
            best = cur
            best_key = (own_before, total_before)
            for step in ("up", "down", "left", "right"):
                cand = _try_data_move(cur, list(fam.data_indices), STEPS[step])
                if cand is None:
                    continue
                own = cand.trees[name].cx_cost
                total = sum(t.cx_cost for t in cand.trees.values())
                if own < best_key[0] and total <= total_before:
                    best, best_key = cand, (own, total)
            cur = best
    return cur


def _channel_objective(layout: QubitLayout) -> float:
    """Sum of GHZ lengths to hypothetical horizontal/vertical neighbors
    plus the total EC cost (the refine_cx objective)."""
    total = 0.0
    for direction in ("h", "v"):
        for rem in layout.pair_rem_lengths(direction, "rm"):
            total += rem - 1 if rem != float("inf") else 1000.0
    total += layout.tot_cx_mode("rm") + layout.tot_cx_mode("steane")
    return total


def refine_cx(layout: QubitLayout) -> QubitLayout:
    """Move each data qubit at most one step to open communication channels."""
    cur = layout
    score = _channel_objective(cur)
    for i in range(15):
        if cur.data_pos[i] is None:
            continue
        best, best_score = cur, score
        for step in ("up", "down", "left", "right"):
            cand = _try_data_move(cur, [i], STEPS[step])
            if cand is None:
                continue
            s = _channel_objective(cand)
            if s < best_score:
                best, best_score = cand, s
        cur, score = best, best_score
    return cur


def place_q15(layout: QubitLayout) -> QubitLayout:
    """Choose the connector cell minimizing switching path length plus EC cost.

    Ties break toward the lowest (row, column).  The search widens from the
    connector's current neighborhood until a reachable cell is found.
    """
    from .codes import CONNECTOR_CX_PARTNERS

    base = layout.data_pos[CONNECTOR]
    partners = [layout.data_pos[p] for p in CONNECTOR_CX_PARTNERS]
    best: tuple[float, Cell] | None = None
    for radius in range(2, 8):
        cands = [c for c in layout.interior_free()
                 if c != base and min(manhattan(c, p) for p in partners) <= radius]
        if base is not None:
            cands.append(base)
        for cell in sorted(set(cands)):
            cand_lay = replace(layout, data_pos=list(layout.data_pos),
                               trees={}, hints=dict(layout.hints))
            cand_lay.data_pos[CONNECTOR] = cell
            try:
                cand_lay.assign_trees()
            except LayoutError:
                continue
            rems = cand_lay.switch_rem_lengths()
            if any(r == float("inf") for r in rems):
                continue
            ghz_total = sum(r - 1 for r in rems)
            cost = ghz_total + cand_lay.tot_cx_mode("rm") + cand_lay.tot_cx_mode("steane")
            key = (cost, cell)
            if best is None or key < best:
                best = key
        if best is not None:
            break
    if best is None:
        raise LayoutError("no reachable connector cell")
    out = replace(layout, data_pos=list(layout.data_pos), trees={},
                  hints=dict(layout.hints))
    out.data_pos[CONNECTOR] = best[1]
    out.assign_trees()
    return out
