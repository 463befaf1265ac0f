"""Physical-circuit synthesis from layouts.

Builds timed circuits for flag-bridge error detection rounds, GHZ-mediated
remote CX gates, transversal logical gates, and the full Steane <-> RM
switching sequence.  Circuits are lists of ops in program order; an ASAP
list scheduler assigns time steps (earliest step at which all operands are
free), and latency counts the time steps that contain at least one CX.

Classically conditioned Pauli corrections (GHZ byproducts, switching frame
fix-ups) are *virtual*: they represent Pauli-frame updates, consume no
hardware time and carry no noise location.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .codes import (
    CONNECTOR,
    CONNECTOR_CX_PARTNERS,
    RM_TO_STEANE,
    STEANE_N,
    STEANE_TO_RM,
    STEANE_LOGICAL_SUPPORT,
    rm_block2_support,
    steane_support,
)
from .geometry import Cell, StabTree, adjacent, bfs_free_path

ONE_QUBIT_KINDS = {"H", "S", "SDG", "T", "TDG", "X", "Z", "I"}


def _is_grid_cell(c) -> bool:
    return (isinstance(c, tuple) and len(c) == 2
            and all(isinstance(v, int) for v in c))


class SynthesisError(ValueError):
    pass


@dataclass
class PhysicalOp:
    kind: str                      # R, M, CX, or a 1q gate kind
    targets: tuple                 # 1 or 2 cells
    time_step: int = -1
    condition: tuple[int, ...] = ()  # XOR of measurement indices
    virtual: bool = False
    sanctioned_t: bool = False
    meas_index: int = -1
    role: str = ""


@dataclass
class PhysicalCircuit:
    """Timed sequence of physical operations on grid cells."""

    ops: list[PhysicalOp] = field(default_factory=list)
    n_meas: int = 0
    declared: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    _declared_set: set = field(default_factory=set)

    def declare(self, cells) -> None:
        """Register qubits that idle through this circuit (for noise)."""
        for c in cells:
            if c not in self._declared_set:
                self._declared_set.add(c)
                self.declared.append(c)

    def append(self, kind: str, *targets, condition=(), virtual=False,
               sanctioned_t=False, role="") -> int:
        if kind == "CX":
            if len(targets) != 2 or targets[0] == targets[1]:
                raise SynthesisError("CX needs two distinct targets")
        elif len(targets) != 1:
            raise SynthesisError(f"{kind} takes one target")
        op = PhysicalOp(kind, tuple(targets), condition=tuple(condition),
                        virtual=virtual, sanctioned_t=sanctioned_t, role=role)
        if kind == "M":
            op.meas_index = self.n_meas
            self.n_meas += 1
        self.ops.append(op)
        self.declare(targets)
        return op.meas_index

    def extend(self, other: "PhysicalCircuit") -> dict[int, int]:
        """Concatenate ``other``; returns its measurement-index remapping."""
        remap = {}
        for op in other.ops:
            new = replace(op, targets=op.targets)
            if op.kind == "M":
                remap[op.meas_index] = self.n_meas
                new.meas_index = self.n_meas
                self.n_meas += 1
            if op.condition:
                new.condition = tuple(remap[m] for m in op.condition)
            self.ops.append(new)
        self.declare(other.declared)
        return remap

    # -- scheduling ----------------------------------------------------------

    def schedule(self) -> "PhysicalCircuit":
        """Assign ASAP time steps (per-qubit program order preserved)."""
        clock: dict = {}
        meas_step: dict[int, int] = {}
        for op in self.ops:
            t = max((clock.get(q, 0) for q in op.targets), default=0)
            for m in op.condition:
                t = max(t, meas_step[m] + 1)
            op.time_step = t
            for q in op.targets:
                clock[q] = t + 1
            if op.kind == "M":
                meas_step[op.meas_index] = t
        return self

    @property
    def n_steps(self) -> int:
        return 1 + max((op.time_step for op in self.ops), default=-1)

    @property
    def latency(self) -> int:
        """Number of time steps containing at least one physical CX."""
        return len({op.time_step for op in self.ops
                    if op.kind == "CX" and not op.virtual})

    def qubits(self) -> list:
        return list(self.declared)

    def validate(self) -> None:
        """Structural checks: step disjointness and CX grid adjacency."""
        if any(op.time_step < 0 for op in self.ops):
            raise SynthesisError("circuit not scheduled")
        busy: set = set()
        for op in self.ops:
            if op.virtual:
                continue
            for q in op.targets:
                key = (op.time_step, q)
                if key in busy:
                    raise SynthesisError(f"qubit {q} doubly used at step {op.time_step}")
                busy.add(key)
            if op.kind == "CX":
                a, b = op.targets
                if _is_grid_cell(a) and _is_grid_cell(b) and not adjacent(a, b):
                    raise SynthesisError(f"CX between non-adjacent cells {a} {b}")

    def noise_locations(self) -> int:
        """(#1q gates incl Identity) + (#CX) + (#Measure) + (#Reset)."""
        return sum(1 for op in self.ops if not op.virtual)

    def pad_identities(self, active_only: bool = True) -> "PhysicalCircuit":
        """Insert explicit Identity ops on idle qubits (noise locations).

        With ``active_only`` a qubit only idles between its first and last
        operation (parked qubits are noiseless); data qubits declared on
        the circuit idle for its whole duration.  Returns a new scheduled
        circuit whose program order is consistent with time order, so idle
        noise propagates correctly.
        """
        if any(op.time_step < 0 for op in self.ops):
            self.schedule()
        covered = {(op.time_step, q) for op in self.ops if not op.virtual
                   for q in op.targets}
        first: dict = {}
        last: dict = {}
        for op in self.ops:
            if op.virtual:
                continue
            for q in op.targets:
                first.setdefault(q, op.time_step)
                first[q] = min(first[q], op.time_step)
                last[q] = max(last.get(q, 0), op.time_step)
        n_steps = self.n_steps
        for q in self.meta.get("always_active", ()):  # data qubits
            first[q] = 0
            last[q] = n_steps - 1
        order = sorted(range(len(self.ops)),
                       key=lambda i: (self.ops[i].time_step, i))
        out = PhysicalCircuit(meta=dict(self.meta))
        out.declare(self.declared)
        idx = 0
        for t in range(n_steps):
            while idx < len(order) and self.ops[order[idx]].time_step == t:
                op = self.ops[order[idx]]
                out.ops.append(replace(op))
                idx += 1
            for q in self.declared:
                if (t, q) in covered:
                    continue
                if active_only and not (first.get(q, n_steps) <= t
                                        <= last.get(q, -1)):
                    continue
                out.ops.append(PhysicalOp("I", (q,), time_step=t))
        out.n_meas = self.n_meas
        return out

    # -- serialization --------------------------------------------------------

    @staticmethod
    def _cell_token(c) -> str:
        if isinstance(c, tuple):
            return f"{c[0]}.{c[1]}"
        return str(c)

    def to_text(self) -> str:
        """Line-oriented dump: one op per line, TICK between time steps."""
        if any(op.time_step < 0 for op in self.ops):
            self.schedule()
        lines = []
        order = sorted(range(len(self.ops)),
                       key=lambda i: (self.ops[i].time_step, i))
        prev_t = 0
        for i in order:
            op = self.ops[i]
            while prev_t < op.time_step:
                lines.append("TICK")
                prev_t += 1
            toks = [("V" if op.virtual else "") + op.kind]
            toks += [self._cell_token(q) for q in op.targets]
            if op.condition:
                toks.append("if " + "^".join(str(m) for m in op.condition))
            line = " ".join(toks)
            if op.kind == "M" and op.role:
                line += f"  # role: {op.role}"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def measured_roles(self) -> dict[int, str]:
        return {op.meas_index: op.role for op in self.ops if op.kind == "M"}


# -- error-detection rounds ---------------------------------------------------


def ec_round_ops(circ: PhysicalCircuit, tree: StabTree, kind: str,
                 data_order: list[Cell], label: str) -> dict:
    """Append one stabilizer measurement (flag-bridge circuit).

    ``kind`` is "Z" for a Z-type stabilizer (collects data Z-parity onto a
    |0> parity qubit, flags in |+>) or "X" for the H-conjugated dual.
    Returns a descriptor with the parity/flag measurement indices.
    """
    root = tree.root
    internal = tree.internal
    circ.append("R", root)
    if kind == "X":
        circ.append("H", root)
    for f in internal:
        circ.append("R", f)
        if kind == "Z":
            circ.append("H", f)
    # Opens, data collections, closes.  Z-type: ancilla-side CX runs child
    # to parent and data control onto its collector; X-type is the mirror.
    for f in internal:
        circ.append("CX", *( (f, tree.parent[f]) if kind == "Z"
                             else (tree.parent[f], f) ))
    for d in data_order:
        p = tree.data_parent[d]
        circ.append("CX", *((d, p) if kind == "Z" else (p, d)))
    for f in reversed(internal):
        circ.append("CX", *( (f, tree.parent[f]) if kind == "Z"
                             else (tree.parent[f], f) ))
    if kind == "X":
        circ.append("H", root)
    parity_idx = circ.append("M", root, role=f"parity:{label}")
    flag_idx = []
    for i, f in enumerate(internal):
        if kind == "Z":
            circ.append("H", f)
        flag_idx.append(circ.append("M", f, role=f"flag:{label}:{i}"))
    return {"label": label, "kind": kind, "parity": parity_idx,
            "flags": flag_idx, "tree": tree, "data": list(data_order)}


def synth_ec_round(layout, stab_id) -> PhysicalCircuit:
    """Circuit measuring a single stabilizer of ``layout``."""
    spec = layout.measure_spec(stab_id)
    circ = PhysicalCircuit()
    circ.declare(layout.occupied())
    info = ec_round_ops(circ, spec.tree, spec.kind, spec.data_cells, spec.label)
    circ.meta["rounds"] = [info]
    circ.schedule()
    return circ


def synth_full_ec(layout, mode: str) -> PhysicalCircuit:
    """All stabilizer measurements of ``mode``, greedily overlapped."""
    circ = PhysicalCircuit()
    circ.declare(layout.occupied())
    rounds = []
    for spec in layout.measure_specs(mode):
        rounds.append(ec_round_ops(circ, spec.tree, spec.kind,
                                   spec.data_cells, spec.label))
    circ.meta["rounds"] = rounds
    circ.meta["mode"] = mode
    circ.schedule()
    return circ


# -- remote CX ----------------------------------------------------------------


def remote_cx_ops(circ: PhysicalCircuit, control: Cell, target: Cell,
                  path: list[Cell]) -> None:
    """Append a remote CX mediated by a GHZ chain along ``path``.

    The chain is grown by a CX ladder, coupled to the endpoints, and
    measured out; the byproduct Paulis (X on the target for the head's
    Z-outcome, Z on the control for the X-parity of the rest) are emitted
    as virtual conditional corrections.
    """
    if not path:
        if _is_grid_cell(control) and _is_grid_cell(target) \
                and not adjacent(control, target):
            raise SynthesisError(f"no path and not adjacent: {control} {target}")
        circ.append("CX", control, target)
        return
    k = len(path)
    for p in path:
        circ.append("R", p)
    circ.append("H", path[0])
    for i in range(k - 1):
        circ.append("CX", path[i], path[i + 1])
    circ.append("CX", path[-1], target)
    circ.append("CX", control, path[0])
    m_head = circ.append("M", path[0], role="ghz")
    m_rest = []
    for p in path[1:]:
        circ.append("H", p)
        m_rest.append(circ.append("M", p, role="ghz"))
    circ.append("X", target, condition=(m_head,), virtual=True)
    if m_rest:
        circ.append("Z", control, condition=tuple(m_rest), virtual=True)


def synth_remote_cx(layout, control: Cell, target: Cell,
                    occupied=None) -> PhysicalCircuit:
    """Standalone remote CX between two cells of a layout."""
    occ = set(layout.occupied() if occupied is None else occupied)
    path = bfs_free_path(control, target, occ - {control, target})
    if path is None:
        raise SynthesisError(f"no uninterrupted GHZ path {control} -> {target}")
    circ = PhysicalCircuit()
    circ.declare(layout.occupied())
    remote_cx_ops(circ, control, target, path)
    circ.meta["ghz_len"] = len(path)
    circ.schedule()
    return circ


# -- logical gates ------------------------------------------------------------


def synth_logical_gate(layout, gate: str, mode: str) -> PhysicalCircuit:
    """Transversal single-logical-qubit gate: one physical gate per data qubit."""
    code = layout.code(mode)
    name = gate[:-2] if gate.endswith("_L") else gate
    name = name.upper()
    phys = code.transversal_gates.get(name)
    if phys is None or name == "CX":
        raise SynthesisError(
            f"{name} is not transversal in {mode} mode: requires code switching")
    circ = PhysicalCircuit()
    circ.declare(layout.occupied())
    sanction = phys in ("T", "TDG")
    for cell in layout.mode_data(mode):
        circ.append(phys, cell, sanctioned_t=sanction)
    circ.meta["gate"] = name
    circ.schedule()
    return circ


def synth_logical_cx(layout_a, layout_b, mode: str,
                     occupied=None, append_ec: bool = True) -> PhysicalCircuit:
    """Transversal logical CX: pairwise remote CX between corresponding data.

    Gadgets are emitted in data-index order; the scheduler runs gadgets with
    disjoint cells concurrently.  One EC round per logical qubit is appended;
    ``meta["gadget_latency"]`` records the CX-step count of the remote-CX
    phase alone (the edge-latency figure used by placement).
    """
    cells_a = layout_a.mode_data(mode)
    cells_b = layout_b.mode_data(mode)
    occ = set(layout_a.occupied()) | set(layout_b.occupied()) \
        if occupied is None else set(occupied)
    circ = PhysicalCircuit()
    circ.declare(layout_a.occupied())
    circ.declare(layout_b.occupied())
    taken = set(occ)
    rem_lens = []
    for a, b in zip(cells_a, cells_b):
        path = bfs_free_path(a, b, taken - {a, b})
        if path is None:
            raise SynthesisError(f"unreachable data pair {a} -> {b}")
        remote_cx_ops(circ, a, b, path)
        rem_lens.append(len(path) + 1)
    circ.schedule()
    circ.meta["gadget_latency"] = circ.latency
    circ.meta["rem_cx_lengths"] = rem_lens
    rounds = []
    if append_ec:
        for lay in (layout_a, layout_b):
            for spec in lay.measure_specs(mode):
                rounds.append(ec_round_ops(circ, spec.tree, spec.kind,
                                           spec.data_cells, spec.label))
    circ.meta["rounds"] = rounds
    circ.schedule()
    return circ


# -- code switching -----------------------------------------------------------


def _steane_round_on_block2(circ, layout, fix_round: bool):
    """One Steane EC round on block two; optionally emit prep-frame fixes."""
    infos = []
    for spec in layout.measure_specs("steane2"):
        info = ec_round_ops(circ, spec.tree, spec.kind, spec.data_cells,
                            spec.label)
        infos.append(info)
        if fix_round and spec.kind == "X":
            # First-time X checks are random: pin them with a Z on the
            # data qubit whose label has only this stabilizer's bit set.
            i = spec.index
            fix_cell = layout.data_pos[7 + (2 ** i - 1)]
            circ.append("Z", fix_cell, condition=(info["parity"],), virtual=True)
    return infos


def synth_code_switch(layout, direction: str) -> PhysicalCircuit:
    """Full switching sequence on one logical tile.

    Steane->RM: reset block two and the connector, run three Steane EC
    rounds on block two (first round pins the random X checks), fan the
    connector's |+> into block two, run the transversal block CX, measure
    the connector in X, then one RM EC round whose first-time stabilizers
    (the joint checks and the connector-weight check) are absorbed into the
    Pauli frame.  RM->Steane is the step-reversed realization.
    """
    data = layout.data_pos
    q15 = data[CONNECTOR]
    partners = [data[q] for q in CONNECTOR_CX_PARTNERS]
    b1 = [data[q] for q in range(STEANE_N)]
    b2 = [data[q + 7] for q in range(STEANE_N)]
    occ = set(layout.occupied())
    circ = PhysicalCircuit()
    circ.declare(layout.occupied())
    rounds = []

    def remote(c, t):
        path = bfs_free_path(c, t, occ - {c, t})
        if path is None:
            raise SynthesisError(f"unreachable switching pair {c} -> {t}")
        remote_cx_ops(circ, c, t, path)

    if direction == STEANE_TO_RM:
        for cell in b2:
            circ.append("R", cell)
        circ.append("R", q15)
        for rnd in range(3):
            rounds += _steane_round_on_block2(circ, layout, fix_round=(rnd == 0))
        circ.append("H", q15)
        for p in partners:
            remote(q15, p)
        for a, b in zip(b1, b2):
            remote(a, b)
        circ.append("H", q15)
        m15 = circ.append("M", q15, role="connector")
        for q in (0, 1, 2, 7, 8, 9, CONNECTOR):
            circ.append("Z", data[q], condition=(m15,), virtual=True)
        joint_fix = {"j01": rm_block2_support(2), "j02": rm_block2_support(1),
                     "j12": rm_block2_support(0)}
        for spec in layout.measure_specs("rm"):
            info = ec_round_ops(circ, spec.tree, spec.kind, spec.data_cells,
                                spec.label)
            rounds.append(info)
            if spec.label in joint_fix:
                for q in joint_fix[spec.label]:
                    circ.append("X", data[q], condition=(info["parity"],),
                                virtual=True)
            elif spec.label == "zw3":
                circ.append("X", q15, condition=(info["parity"],), virtual=True)
    elif direction == RM_TO_STEANE:
        for spec in layout.measure_specs("rm"):
            rounds.append(ec_round_ops(circ, spec.tree, spec.kind,
                                       spec.data_cells, spec.label))
        for a, b in zip(b1, b2):
            remote(a, b)
        for p in partners:
            remote(q15, p)
        for rnd in range(3):
            for spec in layout.measure_specs("steane"):
                rounds.append(ec_round_ops(circ, spec.tree, spec.kind,
                                           spec.data_cells, spec.label))
        circ.append("H", q15)
        m15 = circ.append("M", q15, role="connector")
        for q in (9, 13, CONNECTOR):
            circ.append("Z", data[q], condition=(m15,), virtual=True)
        mb2 = []
        for cell in b2:
            circ.append("H", cell)
            mb2.append(circ.append("M", cell, role="data"))
        for q in STEANE_LOGICAL_SUPPORT:
            circ.append("Z", data[q], condition=tuple(mb2[:3]), virtual=True)
        for cell in b2:
            circ.append("R", cell)
        circ.append("R", q15)
    else:
        raise SynthesisError(f"unknown switching direction {direction!r}")

    circ.meta["rounds"] = rounds
    circ.meta["direction"] = direction
    circ.schedule()
    return circ
