"""Logical-program compilation for the changeable logical qubit.

Clifford+T programs are parsed from a QASM-style text format, routed onto a
logical coupling graph with fidelity-aware SWAP insertion, and given their
code-switching schedule by one of two passes:

* ``agnostic_cs``: every T/TDG gate is wrapped in its own switch pair.
* ``block_pass``: context-aware blocking -- grow a block around each T gate
  until an H/S closes the window on a qubit, drop commutable gates off the
  block boundaries, merge gap-free windows per qubit, and split blocks at
  CX gates whenever the cost model says the split pays for itself.

Costing follows the normalized per-operation table (infidelity in units of
one Steane-mode logical CX, latency in units of one Steane EC round); EC
rounds implicitly follow every logical gate, so explicit ``ec`` pseudo-ops
carry no extra cost.
"""

from __future__ import annotations

import heapq
import json
import re
import warnings
from dataclasses import dataclass, field, replace

ONE_QUBIT = {"H", "S", "SDG", "T", "TDG", "X", "Z"}
TWO_QUBIT = {"CX", "SWAP"}
CLOSERS = {"H", "S", "SDG"}       # gates that force Steane mode
T_GATES = {"T", "TDG"}
CS_TO_RM = "CS_TO_RM"
CS_TO_STEANE = "CS_TO_STEANE"


class CompileError(ValueError):
    pass


@dataclass(frozen=True)
class LogicalInstr:
    op: str
    qubits: tuple[int, ...]

    def __repr__(self):
        return f"{self.op}{list(self.qubits)}"


@dataclass
class LogicalProgram:
    n_qubits: int
    instrs: list[LogicalInstr] = field(default_factory=list)

    def copy(self) -> "LogicalProgram":
        return LogicalProgram(self.n_qubits, list(self.instrs))

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for ins in self.instrs:
            out[ins.op] = out.get(ins.op, 0) + 1
        return out

    def cs_count(self) -> int:
        return sum(1 for i in self.instrs if i.op in (CS_TO_RM, CS_TO_STEANE))


@dataclass
class CostModel:
    """Normalized per-op infidelity (Steane CX units) and latency (Steane EC
    units); EC is bundled into each logical op per the normalization."""

    infidelity: dict[str, float] = field(default_factory=lambda: {
        "rm_cx": 8.8, "rm_1q": 2.6, "steane_cx": 1.0, "steane_1q": 0.2,
        "cs": 4.1})
    latency: dict[str, float] = field(default_factory=lambda: {
        "rm_cx": 5.5, "rm_1q": 3.0, "steane_cx": 2.9, "steane_1q": 1.0,
        "cs": 9.1})

    def op_key(self, op: str, mode: str) -> str | None:
        if op in (CS_TO_RM, CS_TO_STEANE):
            return "cs"
        if op == "EC":
            return None
        if op in ("CX", "SWAP"):
            return "rm_cx" if mode == "rm" else "steane_cx"
        return "rm_1q" if mode == "rm" else "steane_1q"


# -- parsing -------------------------------------------------------------------

_GATE_RE = re.compile(r"^(\w+)\s+(.*)$")
_QUBIT_RE = re.compile(r"^(\w+)\[(\d+)\]$")
ACCEPTED = {"h": "H", "s": "S", "sdg": "SDG", "t": "T", "tdg": "TDG",
            "x": "X", "z": "Z", "cx": "CX", "swap": "SWAP",
            "ec": "EC", "cs_to_rm": CS_TO_RM, "cs_to_steane": CS_TO_STEANE}


def parse_program(text: str) -> LogicalProgram:
    """Parse the accepted QASM-2.0-compatible subset."""
    n_qubits = None
    reg = None
    instrs: list[LogicalInstr] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//")[0].strip()
        if not line:
            continue
        for stmt in filter(None, (s.strip() for s in line.split(";"))):
            if stmt.startswith("OPENQASM") or stmt.startswith("include"):
                continue
            if stmt.startswith("qreg"):
                m = re.match(r"qreg\s+(\w+)\[(\d+)\]$", stmt)
                if not m:
                    raise CompileError(f"line {lineno}: bad qreg declaration")
                if n_qubits is not None:
                    raise CompileError(f"line {lineno}: multiple qreg declarations")
                reg, n_qubits = m.group(1), int(m.group(2))
                continue
            if stmt.startswith("creg"):
                continue
            if stmt.startswith("barrier"):
                continue
            if stmt.startswith("measure"):
                warnings.warn(f"line {lineno}: measure ignored")
                continue
            m = _GATE_RE.match(stmt)
            if not m:
                raise CompileError(f"line {lineno}: syntax error near {stmt!r}")
            name, args = m.group(1).lower(), m.group(2)
            if name not in ACCEPTED:
                hint = ("decompose to Clifford+T first"
                        if name in ("ccx", "ccz", "rz", "ry", "rx", "u", "u3")
                        else "unsupported gate")
                raise CompileError(f"line {lineno}: gate {name!r} rejected; {hint}")
            qubits = []
            for col, tok in enumerate(a.strip() for a in args.split(",")):
                qm = _QUBIT_RE.match(tok)
                if not qm or (reg is not None and qm.group(1) != reg):
                    raise CompileError(
                        f"line {lineno}, arg {col}: bad qubit operand {tok!r}")
                qubits.append(int(qm.group(2)))
            if n_qubits is None:
                raise CompileError(f"line {lineno}: gate before qreg declaration")
            if any(q >= n_qubits for q in qubits):
                raise CompileError(f"line {lineno}: qubit index out of range")
            op = ACCEPTED[name]
            want = 2 if op in TWO_QUBIT else 1
            if len(qubits) != want:
                raise CompileError(f"line {lineno}: {name} takes {want} operand(s)")
            instrs.append(LogicalInstr(op, tuple(qubits)))
    if n_qubits is None:
        raise CompileError("missing qreg declaration")
    return LogicalProgram(n_qubits, instrs)


def to_qasm(program: LogicalProgram, reg: str = "q") -> str:
    lines = ["OPENQASM 2.0;", f"qreg {reg}[{program.n_qubits}];"]
    names = {v: k for k, v in ACCEPTED.items()}
    for ins in program.instrs:
        args = ",".join(f"{reg}[{q}]" for q in ins.qubits)
        lines.append(f"{names[ins.op]} {args};")
    return "\n".join(lines) + "\n"


# -- mode tracking -------------------------------------------------------------


def validate_modes(program: LogicalProgram) -> None:
    """Check CS pairing and per-mode gate legality; raises on violation."""
    mode = ["steane"] * program.n_qubits
    for idx, ins in enumerate(program.instrs):
        if ins.op == CS_TO_RM:
            q = ins.qubits[0]
            if mode[q] != "steane":
                raise CompileError(f"instr {idx}: q{q} already in RM mode")
            mode[q] = "rm"
        elif ins.op == CS_TO_STEANE:
            q = ins.qubits[0]
            if mode[q] != "rm":
                raise CompileError(f"instr {idx}: q{q} not in RM mode")
            mode[q] = "steane"
        elif ins.op in T_GATES:
            if mode[ins.qubits[0]] != "rm":
                raise CompileError(f"instr {idx}: T outside RM mode")
        elif ins.op in CLOSERS:
            if mode[ins.qubits[0]] != "steane":
                raise CompileError(f"instr {idx}: {ins.op} inside RM mode")
        elif ins.op in ("CX", "SWAP"):
            a, b = ins.qubits
            if mode[a] != mode[b]:
                raise CompileError(f"instr {idx}: CX across different modes")
    if any(m != "steane" for m in mode):
        raise CompileError("unterminated RM window at end of program")


# -- routing -------------------------------------------------------------------


def route(program: LogicalProgram, graph: dict[int, dict[int, float]],
          ) -> LogicalProgram:
    """Fidelity-aware routing: SWAP along min-infidelity paths.

    ``graph`` maps node -> {neighbor: edge infidelity}.  Logical qubit i
    starts on node i; SWAPs permute the mapping greedily per CX (no
    lookahead).  Paths minimize summed edge infidelity with hop count as
    the tie-break.
    """
    nodes = set(graph)
    for q in range(program.n_qubits):
        if q not in nodes:
            raise CompileError(f"coupling graph missing node for qubit {q}")
    # connectivity check
    seen = {next(iter(nodes))}
    stack = list(seen)
    while stack:
        for nb in graph[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if seen != nodes:
        raise CompileError("coupling graph is disconnected")

    pos = {q: q for q in range(program.n_qubits)}   # logical -> node
    at = {q: q for q in range(program.n_qubits)}    # node -> logical
    out = LogicalProgram(program.n_qubits)

    def dijkstra(src: int, dst: int) -> list[int]:
        dist = {src: (0.0, 0)}
        prev: dict[int, int] = {}
        heap = [(0.0, 0, src)]
        while heap:
            d, hops, u = heapq.heappop(heap)
            if u == dst:
                break
            if (d, hops) > dist.get(u, (float("inf"), 0)):
                continue
            for v, w in sorted(graph[u].items()):
                nd = (d + w, hops + 1)
                if nd < dist.get(v, (float("inf"), 0)):
                    dist[v] = nd
                    prev[v] = u
                    heapq.heappush(heap, (nd[0], nd[1], v))
        path = [dst]
        while path[-1] != src:
            path.append(prev[path[-1]])
        return list(reversed(path))

    for ins in program.instrs:
        if ins.op not in TWO_QUBIT:
            out.instrs.append(LogicalInstr(ins.op,
                                           (pos[ins.qubits[0]],)))
            continue
        a, b = ins.qubits
        if pos[b] not in graph[pos[a]]:
            path = dijkstra(pos[a], pos[b])
            # Swap qubit a along the path until adjacent to b.
            for node in path[1:-1]:
                other = at.get(node)
                if other is None:
                    raise CompileError("routing through unmapped node")
                out.instrs.append(LogicalInstr("SWAP", (pos[a], node)))
                old_a = pos[a]
                pos[a], pos[other] = node, old_a
                at[node], at[old_a] = a, other
        out.instrs.append(LogicalInstr(ins.op, (pos[a], pos[b])))
    out.final_positions = dict(pos)
    return out


# -- commutation rules ---------------------------------------------------------


def commutes(g1: LogicalInstr, g2: LogicalInstr) -> bool:
    """Conservative gate commutation (each rule is matrix-verified in tests)."""
    shared = set(g1.qubits) & set(g2.qubits)
    if not shared:
        return True
    diag = {"T", "TDG", "S", "SDG", "Z", CS_TO_RM, CS_TO_STEANE, "EC"}

    def role(g: LogicalInstr, q: int) -> str:
        if g.op == "CX":
            return "control" if g.qubits[0] == q else "target"
        return g.op

    for q in shared:
        r1, r2 = role(g1, q), role(g2, q)
        pair = {r1, r2}
        if r1 == r2 and r1 in ("control", "target"):
            continue
        if pair <= diag | {"control"}:
            continue                      # diagonal ops through CX controls
        if pair <= {"X", "target"}:
            continue                      # X through CX targets
        if r1 == r2 and r1 in diag | {"X"}:
            continue
        return False
    return True


# -- code switching passes -------------------------------------------------------


def _insert_ec(instrs: list[LogicalInstr]) -> list[LogicalInstr]:
    out = []
    for ins in instrs:
        out.append(ins)
        if ins.op in ONE_QUBIT | TWO_QUBIT:
            for q in ins.qubits:
                out.append(LogicalInstr("EC", (q,)))
    return out


def agnostic_cs(program: LogicalProgram, insert_ec: bool = True,
                ) -> LogicalProgram:
    """Context-blind pass: one switch pair around every T/TDG gate."""
    if any(i.op in (CS_TO_RM, CS_TO_STEANE) for i in program.instrs):
        raise CompileError("program already contains CS instructions")
    out = []
    for ins in program.instrs:
        if ins.op in T_GATES:
            q = ins.qubits
            out += [LogicalInstr(CS_TO_RM, q), ins, LogicalInstr(CS_TO_STEANE, q)]
        else:
            out.append(ins)
    prog = LogicalProgram(program.n_qubits,
                          _insert_ec(out) if insert_ec else out)
    validate_modes(prog)
    return prog


@dataclass
class _Block:
    members: set[int]


def _collect_blocks(instrs: list[LogicalInstr]) -> list[_Block]:
    claimed: set[int] = set()
    blocks: list[_Block] = []
    for i, ins in enumerate(instrs):
        if ins.op not in T_GATES or i in claimed:
            continue
        active = {ins.qubits[0]}
        members = {i}
        claimed.add(i)
        for j in range(i + 1, len(instrs)):
            if not active:
                break
            g = instrs[j]
            qs = set(g.qubits)
            if not (qs & active):
                continue
            if g.op in CLOSERS:
                active -= qs
                continue
            if j in claimed:
                continue
            members.add(j)
            claimed.add(j)
            if g.op in TWO_QUBIT:
                active |= qs
        blocks.append(_Block(members))
    return blocks


def _windows(block: _Block, instrs) -> dict[int, tuple[int, int]]:
    win: dict[int, tuple[int, int]] = {}
    for idx in sorted(block.members):
        for q in instrs[idx].qubits:
            lo, hi = win.get(q, (idx, idx))
            win[q] = (min(lo, idx), max(hi, idx))
    return win


def _try_shrink(block: _Block, order: list[int], instrs: dict,
                pos: dict[int, int]) -> bool:
    """Step 2: move CX/X/Z members off the block via commuting rewrites.

    A member already at the block boundary on every one of its qubits is
    simply released (its gate runs in Steane mode unchanged); an interior
    member is bubbled outward through gates it commutes with, then
    released.  Returns True when the block changed.
    """

    def members_on(q: int) -> list[int]:
        return sorted((pos[u] for u in block.members
                       if q in instrs[u].qubits))

    for uid in sorted(block.members, key=lambda u: pos[u]):
        g = instrs[uid]
        if g.op in T_GATES:
            continue
        p = pos[uid]
        sides = []
        for q in g.qubits:
            on_q = members_on(q)
            if on_q[0] == p == on_q[-1]:
                sides.append("both")
            elif on_q[0] == p:
                sides.append("first")
            elif on_q[-1] == p:
                sides.append("last")
            else:
                sides.append("interior")
        if "interior" not in sides:
            if not ({"first", "both"} >= set(sides)
                    or {"last", "both"} >= set(sides)):
                continue  # first on one qubit, last on another: leave alone
            block.members.discard(uid)
            return True
        # Try bubbling toward the nearer boundary through commuting gates.
        for direction in (1, -1):
            limit = max((pos[u] for u in block.members for q in g.qubits
                         if q in instrs[u].qubits and u != uid), default=p)
            lo = min((pos[u] for u in block.members for q in g.qubits
                      if q in instrs[u].qubits and u != uid), default=p)
            target = limit if direction == 1 else lo
            cur = p
            ok = True
            trail = []
            while (cur < target if direction == 1 else cur > target):
                nxt = cur + direction
                other = instrs[order[nxt]]
                if not commutes(g, other):
                    ok = False
                    break
                trail.append(nxt)
                cur = nxt
            if ok and trail:
                seq = order.copy()
                seq.remove(uid)
                insert_at = trail[-1] if direction == 1 else trail[-1]
                seq.insert(insert_at, uid)
                order[:] = seq
                for i, u in enumerate(order):
                    pos[u] = i
                block.members.discard(uid)
                return True
    return False


def block_pass(program: LogicalProgram, cost: CostModel | None = None,
               insert_ec: bool = True) -> LogicalProgram:
    """Context-aware switching placement (blocking, reordering, refining)."""
    if any(i.op in (CS_TO_RM, CS_TO_STEANE) for i in program.instrs):
        raise CompileError("program already contains CS instructions")
    cost = cost or CostModel()
    instrs = {uid: ins for uid, ins in enumerate(program.instrs)}
    order = list(range(len(program.instrs)))
    pos = {u: i for i, u in enumerate(order)}
    blocks = _collect_blocks([instrs[u] for u in order])
    blocks = [_Block({order[i] for i in blk.members}) for blk in blocks]
    for blk in blocks:
        while _try_shrink(blk, order, instrs, pos):
            pass
    seq = [instrs[u] for u in order]
    n = program.n_qubits
    closer_pos: dict[int, list[int]] = {q: [] for q in range(n)}
    for i, ins in enumerate(seq):
        if ins.op in CLOSERS:
            closer_pos[ins.qubits[0]].append(i)
    # Per-qubit RM window segments: member runs split at interposed
    # Steane-only gates (a qubit can leave a block at an H and rejoin at a
    # later CX, giving several windows in one block).
    windows: dict[int, list[list[int]]] = {q: [] for q in range(n)}
    for blk in blocks:
        on_q: dict[int, list[int]] = {}
        for uid in blk.members:
            for q in instrs[uid].qubits:
                on_q.setdefault(q, []).append(pos[uid])
        for q, plist in on_q.items():
            plist.sort()
            run = [plist[0]]
            for p in plist[1:]:
                if any(run[-1] < c < p for c in closer_pos[q]):
                    windows[q].append([run[0], run[-1]])
                    run = [p]
                else:
                    run.append(p)
            windows[q].append([run[0], run[-1]])
    tmo: dict[int, list[int]] = {q: [] for q in range(n)}
    for i, ins in enumerate(seq):
        for q in ins.qubits:
            tmo[q].append(i)
    # Merge windows separated by no gate on that qubit.
    for q in windows:
        windows[q].sort()
        merged: list[list[int]] = []
        for w in windows[q]:
            if merged and w[0] <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], w[1])
            elif merged and not any(merged[-1][1] < t < w[0] for t in tmo[q]):
                merged[-1][1] = max(merged[-1][1], w[1])
            else:
                merged.append(list(w))
        windows[q] = merged

    def in_rm(q: int, idx: int) -> bool:
        return any(lo <= idx <= hi for lo, hi in windows[q])

    # Step 3: split windows at a CX whenever the cost model profits
    # (with the defaults 2*CS >= RM CX - Steane CX, so merges stand).
    surcharge_cx = cost.infidelity["rm_cx"] - cost.infidelity["steane_cx"]
    cs_inf = cost.infidelity["cs"]
    changed = True
    while changed:
        changed = False
        for idx, ins in enumerate(seq):
            if ins.op != "CX" or not all(in_rm(q, idx) for q in ins.qubits):
                continue
            k = 0
            for q in ins.qubits:
                ts = [t for t in tmo[q] if seq[t].op in T_GATES and in_rm(q, t)]
                if any(t < idx for t in ts) and any(t > idx for t in ts):
                    k += 1
            if 2 * cs_inf * k < surcharge_cx:
                for q in ins.qubits:
                    newwins = []
                    for lo, hi in windows[q]:
                        if lo <= idx <= hi:
                            left = [t for t in tmo[q] if lo <= t < idx]
                            right = [t for t in tmo[q] if idx < t <= hi]
                            if left:
                                newwins.append([lo, max(left)])
                            if right:
                                newwins.append([min(right), hi])
                        else:
                            newwins.append([lo, hi])
                    windows[q] = newwins
                changed = True

    # Windows without a T gate are only worth keeping when they host a
    # CX that must stay in RM mode to match its partner.
    for q in windows:
        kept = []
        for w in windows[q]:
            has_t = any(seq[t].op in T_GATES and w[0] <= t <= w[1]
                        for t in tmo[q])
            has_cx = any(seq[t].op in ("CX", "SWAP") and w[0] <= t <= w[1]
                         for t in tmo[q])
            if has_t or has_cx:
                kept.append(w)
        windows[q] = kept

    rewritten = LogicalProgram(n, seq)
    aware_inf = _window_infidelity(seq, windows, cost)
    agn = agnostic_cs(program, insert_ec=False)
    if aware_inf > evaluate(agn, cost).infidelity + 1e-9:
        return agnostic_cs(program, insert_ec=insert_ec)

    out: list[LogicalInstr] = []
    for idx, ins in enumerate(seq):
        for q in ins.qubits:
            if any(lo == idx for lo, hi in windows[q]):
                out.append(LogicalInstr(CS_TO_RM, (q,)))
        out.append(ins)
        for q in reversed(ins.qubits):
            if any(hi == idx for lo, hi in windows[q]):
                out.append(LogicalInstr(CS_TO_STEANE, (q,)))
    prog = LogicalProgram(n, _insert_ec(out) if insert_ec else out)
    validate_modes(prog)
    return prog


def _window_infidelity(instrs, windows, cost: CostModel) -> float:
    total = 0.0
    for q in windows:
        total += 2 * cost.infidelity["cs"] * len(windows[q])

    def in_rm(q, idx):
        return any(lo <= idx <= hi for lo, hi in windows[q])

    for idx, ins in enumerate(instrs):
        if ins.op in ("CX", "SWAP"):
            mode = "rm" if all(in_rm(q, idx) for q in ins.qubits) else "steane"
            mult = 3 if ins.op == "SWAP" else 1
            total += mult * cost.infidelity[f"{mode}_cx"]
        elif ins.op in ONE_QUBIT:
            mode = "rm" if in_rm(ins.qubits[0], idx) else "steane"
            total += cost.infidelity[f"{mode}_1q"]
    return total


# -- evaluation ------------------------------------------------------------------


@dataclass
class Report:
    infidelity: float
    latency: float
    space_time: float
    cs_count: int
    swap_count: int
    per_op_histogram: dict[str, int]

    def to_json(self) -> str:
        return json.dumps({
            "cs_count": self.cs_count,
            "swap_count": self.swap_count,
            "infidelity_norm": round(self.infidelity, 4),
            "latency_norm": round(self.latency, 4),
            "space_time": round(self.space_time, 4),
            "per_op_histogram": self.per_op_histogram,
        }, indent=2)


def evaluate(program: LogicalProgram, cost: CostModel | None = None,
             placement_info: dict | None = None) -> Report:
    """Serial-sum costing under the additive small-error approximation.

    Each op contributes its table infidelity/latency (EC bundled); SWAP
    counts as three CX of its mode.  ``placement_info`` may carry
    ``phys_qubits`` and a per-edge ``edge_infidelity`` map for Steane CX
    multipliers.
    """
    cost = cost or CostModel()
    validate_modes(program)
    mode = ["steane"] * program.n_qubits
    edge_mult = (placement_info or {}).get("edge_infidelity", {})
    infid = 0.0
    latency = 0.0
    hist: dict[str, int] = {}
    swaps = 0
    for ins in program.instrs:
        hist[ins.op] = hist.get(ins.op, 0) + 1
        if ins.op == CS_TO_RM:
            mode[ins.qubits[0]] = "rm"
        elif ins.op == CS_TO_STEANE:
            mode[ins.qubits[0]] = "steane"
        m = mode[ins.qubits[0]]
        key = cost.op_key(ins.op, m)
        if key is None:
            continue
        mult = 3 if ins.op == "SWAP" else 1
        if ins.op == "SWAP":
            swaps += 1
        f = cost.infidelity[key] * mult
        if ins.op == "CX" and m == "steane":
            f *= edge_mult.get(tuple(sorted(ins.qubits)), 1.0)
        infid += f
        latency += cost.latency[key] * mult
    phys = (placement_info or {}).get("phys_qubits",
                                      42 * program.n_qubits)
    return Report(infidelity=infid, latency=latency,
                  space_time=phys * latency, cs_count=program.cs_count(),
                  swap_count=swaps, per_op_histogram=hist)


# -- reference circuits -----------------------------------------------------------


def toffoli_program() -> LogicalProgram:
    """Standard 7-T, 6-CX, 2-H decomposition of the Toffoli gate."""
    text = """
    OPENQASM 2.0;
    qreg q[3];
    h q[2];
    cx q[1],q[2];
    tdg q[2];
    cx q[0],q[2];
    t q[2];
    cx q[1],q[2];
    tdg q[2];
    cx q[0],q[2];
    t q[1];
    t q[2];
    h q[2];
    cx q[0],q[1];
    t q[0];
    tdg q[1];
    cx q[0],q[1];
    """
    return parse_program(text)
