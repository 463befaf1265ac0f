"""Monte-Carlo protocols: memory and logical-CX error rates.

A protocol bundles a noisy circuit, the lookup tables decoding its EC
rounds, and the logical operators whose flips count as failure.  Trials
start from an ideally prepared codeword (the Pauli frame tracks
deviations, so preparation is implicit); after the per-round lookup
corrections, an ideal closure round decodes the true residual syndrome and
any remaining logical action is a failure.

``threshold_cx_protocol`` rebuilds the profiling configuration behind the
pseudo-threshold table: a transversal CX between two Steane blocks whose
check circuits use a configurable flag count and whose data pairs sit a
configurable GHZ path length apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import PauliString, StabilizerCode, steane_code
from .decoder import LookupTable, build_table_from_circuit
from .geometry import StabTree
from .sim import (
    FrameSimulator,
    NoiseModel,
    RateEstimate,
    adaptive_rate,
    build_code_correction_table,
    estimate_rate,
    pseudo_threshold as _bisect_threshold,
)
from .synthesis import PhysicalCircuit, ec_round_ops, remote_cx_ops


@dataclass
class BlockSpec:
    code: StabilizerCode
    data_cols: list[int]
    table: LookupTable
    sx: np.ndarray
    sz: np.ndarray
    lx: np.ndarray
    lz: np.ndarray
    ideal_keys: np.ndarray
    ideal_corr: np.ndarray


@dataclass
class Protocol:
    """``failure`` selects the counted flips: "all" logical operators, or
    "target_z" (Z-logical of the last block, the CSS sector convention used
    for the gate-profiling table)."""

    name: str
    circuit: PhysicalCircuit
    sim: FrameSimulator
    blocks: list[BlockSpec]
    failure: str = "all"

    def run_batch(self, p: float, seed: int, batch: int, index: int) -> int:
        flips, fx, fz = self.sim.run(NoiseModel(p), seed, batch, index)
        fail = np.zeros(batch, dtype=bool)
        for blk in self.blocks:
            table = blk.table
            ex = fx[:, blk.data_cols].copy()
            ez = fz[:, blk.data_cols].copy()
            bits = np.zeros(batch, dtype=np.int64)
            pos = {m: i for i, m in enumerate(table.key_bits)}
            for i, m in enumerate(table.key_bits):
                bits |= flips[:, m].astype(np.int64) << i
            idx = table.decode_packed(np.zeros(batch, dtype=np.int64), bits)
            ex ^= table.corrections[idx, 0]
            ez ^= table.corrections[idx, 1]
            # Ideal continuation: sliding-window follow-up decodes until
            # residual syndromes settle, then leftovers via the code table.
            prev = bits
            for _ in range(4):
                syn = ((ex @ blk.sz.T) + (ez @ blk.sx.T)) % 2
                synkey = np.zeros(batch, dtype=np.int64)
                for p_idx, stab_idx in zip(table.parity_bits,
                                           table.stab_of_parity):
                    synkey |= syn[:, stab_idx].astype(np.int64) << pos[p_idx]
                if not synkey.any():
                    break
                idx2 = table.decode_packed(prev, synkey)
                ex ^= table.corrections[idx2, 0]
                ez ^= table.corrections[idx2, 1]
                prev = synkey
            syn = ((ex @ blk.sz.T) + (ez @ blk.sx.T)) % 2
            skeys = syn.astype(np.int64) @ (
                1 << np.arange(syn.shape[1], dtype=np.int64))
            order = np.searchsorted(blk.ideal_keys, skeys)
            order = np.clip(order, 0, len(blk.ideal_keys) - 1)
            hit = blk.ideal_keys[order] == skeys
            corr = np.where(hit[:, None, None], blk.ideal_corr[order], 0)
            ex ^= corr[:, 0].astype(np.uint8)
            ez ^= corr[:, 1].astype(np.uint8)
            flip_z = (ex @ blk.lz) % 2      # X-type residual flips Z_L
            flip_x = (ez @ blk.lx) % 2
            if self.failure == "all":
                fail |= (flip_z + flip_x) > 0
            elif self.failure == "target_z" and blk is self.blocks[-1]:
                fail |= flip_z > 0
        return int(fail.sum())


def _block_spec(code: StabilizerCode, data_cols: list[int],
                table: LookupTable) -> BlockSpec:
    m = len(code.stabilizers)
    sx = np.array([s.x for s in code.stabilizers], dtype=np.uint8)
    sz = np.array([s.z for s in code.stabilizers], dtype=np.uint8)
    ideal = build_code_correction_table(code)
    keys = []
    corrs = []
    for syn, p in ideal.items():
        keys.append(int(np.array(syn, dtype=np.int64)
                        @ (1 << np.arange(m, dtype=np.int64))))
        corrs.append(np.stack([p.x, p.z]))
    order = np.argsort(keys)
    return BlockSpec(
        code=code, data_cols=data_cols, table=table,
        sx=sx, sz=sz,
        lx=code.logical_x.x.astype(np.int64),
        lz=code.logical_z.z.astype(np.int64),
        ideal_keys=np.array(keys, dtype=np.int64)[order],
        ideal_corr=np.stack(corrs)[order].astype(np.uint8),
    )


# -- parametric Steane circuits ------------------------------------------------


def _steane_trees(block: str, flags: int) -> list[tuple[StabTree, list]]:
    """Abstract flag-bridge trees with a configurable flag count.

    With f flags the parity plus flag cells form a chain; the four data
    qubits of each check spread over the chain ends (one more CX relay per
    extra flag, matching the profiling knob).
    """
    code = steane_code()
    out = []
    for idx, stab in enumerate(code.stabilizers):
        kind = "X" if stab.x.any() else "Z"
        support = [q for q in range(7) if stab.x[q] or stab.z[q]]
        parity = (block, "p", idx)
        chain = [(block, "f", idx, j) for j in range(flags)]
        parent = {}
        prev = parity
        for f in chain:
            parent[f] = prev
            prev = f
        data_cells = [(block, "d", q) for q in support]
        # Two data on the parity; the last two chain cells take one each
        # (a single flag takes both), so each extra flag adds two CX.
        if flags == 1:
            assign = [parity, parity, chain[0], chain[0]]
        else:
            assign = [parity, parity, chain[-2], chain[-1]]
        data_parent = {cell: holder
                       for cell, holder in zip(data_cells, assign)}
        tree = StabTree(root=parity, internal=list(chain), parent=parent,
                        data_parent=data_parent, flags=list(chain))
        out.append((tree, kind, support, data_cells, f"{block}{idx}"))
    return out


def _append_block_ec(circ: PhysicalCircuit, block: str, flags: int):
    infos = []
    for tree, kind, support, data_cells, label in _steane_trees(block, flags):
        infos.append(ec_round_ops(circ, tree, kind, data_cells, label))
    return infos


def steane_memory_protocol(flags: int = 1) -> Protocol:
    """One noisy EC round on an ideally prepared Steane codeword."""
    circ = PhysicalCircuit()
    circ.declare([("a", "d", q) for q in range(7)])
    circ.meta["always_active"] = [("a", "d", q) for q in range(7)]
    infos = _append_block_ec(circ, "a", flags)
    circ.meta["rounds"] = infos
    circ.schedule()
    padded = circ
    code = steane_code()
    data = [("a", "d", q) for q in range(7)]
    table = build_table_from_circuit(padded, code, data, "steane")
    sim = FrameSimulator(padded)
    cols = [sim.qubit_index[c] for c in data]
    spec = _block_spec(code, cols, table)
    return Protocol("steane_memory", padded, sim, [spec])


def threshold_cx_protocol(flags: int = 1, ghz: int = 0) -> Protocol:
    """Transversal Steane CX with per-pair GHZ chains plus one EC round each.

    ``ghz`` is the GHZ path length between corresponding data qubits (0
    means direct CX); ``flags`` is the per-check flag count.
    """
    circ = PhysicalCircuit()
    data_a = [("a", "d", q) for q in range(7)]
    data_b = [("b", "d", q) for q in range(7)]
    circ.declare(data_a)
    circ.declare(data_b)
    circ.meta["always_active"] = data_a + data_b
    for q in range(7):
        path = [("g", q, k) for k in range(ghz)]
        remote_cx_ops(circ, data_a[q], data_b[q], path)
    rounds = []
    rounds += _append_block_ec(circ, "a", flags)
    rounds += _append_block_ec(circ, "b", flags)
    circ.meta["rounds"] = rounds
    circ.schedule()
    padded = circ
    code = steane_code()
    sim = FrameSimulator(padded)
    blocks = []
    for block, data, rounds_slice in (("a", data_a, slice(0, 6)),
                                      ("b", data_b, slice(6, 12))):
        sub_meta = {"rounds": padded.meta["rounds"][rounds_slice]}
        table = build_table_from_circuit(
            padded, code, data, f"steane_{block}", rounds=sub_meta["rounds"])
        cols = [sim.qubit_index[c] for c in data]
        blocks.append(_block_spec(code, cols, table))
    return Protocol(f"steane_cx_f{flags}_g{ghz}", padded, sim, blocks,
                    failure="target_z")


def layout_memory_protocol(layout, mode: str = "steane") -> Protocol:
    """Memory protocol on a real layout's EC round."""
    from .decoder import build_table
    from .synthesis import synth_full_ec

    circ = synth_full_ec(layout, mode)
    table = build_table(layout, mode)
    code = layout.code(mode)
    data = layout.mode_data(mode)
    sim = FrameSimulator(circ)
    cols = [sim.qubit_index[c] for c in data]
    spec = _block_spec(code, cols, table)
    return Protocol(f"{layout.scheme}_{mode}_memory", circ, sim, [spec])


# -- estimator entry points ------------------------------------------------------


def logical_error_rate(protocol: Protocol, noise: NoiseModel, trials: int,
                       seed: int) -> RateEstimate:
    return estimate_rate(protocol.run_batch, noise.p, seed, trials)


def pseudo_threshold(protocol: Protocol, seed: int,
                     start_trials: int = 10_000,
                     cap: int = 2_000_000) -> tuple[float, list]:
    def rate_at(p: float, s: int) -> RateEstimate:
        return adaptive_rate(protocol.run_batch, p, s,
                             start=start_trials, cap=cap)

    return _bisect_threshold(rate_at, seed)
