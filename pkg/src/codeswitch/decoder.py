"""Lookup-table decoder built by exhaustive single-fault enumeration.

Flag fault tolerance is inherently two-stage: a fault late in a round can
fire a flag (or nothing at all) while its data error stays invisible until
the next round's checks.  The table therefore keys on the PREVIOUS round's
(parity, flag) bits concatenated with the current round's bits:

* immediate entries (previous bits zero) give the best correction for the
  bits one round shows;
* follow-up entries (previous bits set) map last round's pattern plus the
  next round's syndrome to the residual left after the immediate
  correction.

Construction enumerates every nontrivial Pauli fault at every location of
one full EC round, propagates it noiselessly, settles the immediate
corrections by minimum residual weight, and then derives follow-up entries
from the post-correction residuals.  Two faults that produce the same
follow-up key with logically inequivalent residuals mean the circuit is
not fault tolerant; construction fails loudly.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .codes import PauliString, StabilizerCode, apply_pauli
from .sim import FrameSimulator
from .synthesis import PhysicalCircuit


class DecoderBuildError(ValueError):
    pass


@dataclass
class LookupTable:
    """Maps (previous-round bits, current-round bits) to data corrections."""

    mode: str
    key_bits: list[int]                  # measurement indices of one round
    flag_bits: list[int]                 # subset of key_bits that are flags
    parity_bits: list[int]               # per-stabilizer parity indices
    stab_of_parity: list[int]            # code stabilizer index per parity bit
    n_data: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)
    corrections: np.ndarray | None = None   # (K, 2, n_data) uint8
    miss_count: int = 0

    @property
    def key_width(self) -> int:
        return len(self.key_bits) + len(self.flag_bits)

    def pack_bits(self, bits) -> tuple[int, int]:
        """(flags_packed, all_bits_packed) for one round's outcome bits."""
        whole = 0
        for i, m in enumerate(self.key_bits):
            whole |= int(bits[i]) << i
        flags = 0
        pos = {m: i for i, m in enumerate(self.key_bits)}
        for j, m in enumerate(self.flag_bits):
            flags |= int(bits[pos[m]]) << j
        return flags, whole

    def syndrome_key(self, syndrome) -> int:
        """Pack a true code syndrome into the parity positions of a round."""
        pos = {m: i for i, m in enumerate(self.key_bits)}
        whole = 0
        for p_idx, stab_idx in zip(self.parity_bits, self.stab_of_parity):
            whole |= int(syndrome[stab_idx]) << pos[p_idx]
        return whole

    def lookup(self, prev_bits: int, bits_packed: int) -> int:
        idx = self.entries.get((prev_bits, bits_packed))
        if idx is None:
            self.miss_count += 1
            return 0
        return idx

    def decode_bits(self, bits, prev_bits: int = 0) -> PauliString:
        _, whole = self.pack_bits(bits)
        idx = self.lookup(prev_bits, whole)
        x, z = self.corrections[idx]
        return PauliString(self.n_data, x.copy(), z.copy())

    def decode_packed(self, prev_bits: np.ndarray,
                      bits: np.ndarray) -> np.ndarray:
        """Vectorized decode: arrays of packed keys -> correction indices."""
        pairs = np.stack([prev_bits, bits], axis=1)
        uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
        lut = np.zeros(len(uniq), dtype=np.int64)
        for i, (f, b) in enumerate(uniq):
            idx = self.entries.get((int(f), int(b)))
            if idx is None:
                self.miss_count += int((inv == i).sum())
                idx = 0
            lut[i] = idx
        return lut[inv]

    # -- serialization ------------------------------------------------------

    def to_blob(self) -> bytes:
        header = json.dumps({
            "mode": self.mode,
            "key_width": self.key_width,
            "entry_count": len(self.entries),
            "miss_policy": "identity",
            "n_data": self.n_data,
            "key_bits": self.key_bits,
            "flag_bits": self.flag_bits,
            "parity_bits": self.parity_bits,
            "stab_of_parity": self.stab_of_parity,
        }).encode()
        parts = [struct.pack("<I", len(header)), header,
                 struct.pack("<I", len(self.entries))]
        for (f, b), idx in sorted(self.entries.items()):
            parts.append(struct.pack("<QQI", f, b, idx))
        corr = self.corrections.astype(np.uint8)
        parts.append(struct.pack("<I", corr.shape[0]))
        parts.append(corr.tobytes())
        return b"".join(parts)

    @classmethod
    def from_blob(cls, blob: bytes) -> "LookupTable":
        (hlen,) = struct.unpack_from("<I", blob, 0)
        off = 4
        header = json.loads(blob[off:off + hlen].decode())
        off += hlen
        (n_ent,) = struct.unpack_from("<I", blob, off)
        off += 4
        entries = {}
        for _ in range(n_ent):
            f, b, idx = struct.unpack_from("<QQI", blob, off)
            off += 20
            entries[(f, b)] = idx
        (n_corr,) = struct.unpack_from("<I", blob, off)
        off += 4
        n_data = header["n_data"]
        corr = np.frombuffer(blob[off:off + n_corr * 2 * n_data],
                             dtype=np.uint8).reshape(n_corr, 2, n_data).copy()
        return cls(mode=header["mode"], key_bits=header["key_bits"],
                   flag_bits=header["flag_bits"],
                   parity_bits=header["parity_bits"],
                   stab_of_parity=header["stab_of_parity"],
                   n_data=n_data, entries=entries, corrections=corr)


def round_key_bits(circuit: PhysicalCircuit):
    """Canonical (all_bits, flag_bits, parity_bits) of a full EC round."""
    bits, flags, parities = [], [], []
    for info in circuit.meta["rounds"]:
        bits.append(info["parity"])
        parities.append(info["parity"])
        for f in info["flags"]:
            bits.append(f)
            flags.append(f)
    return bits, flags, parities


def _unused():
    pass


def enumerate_faults(sim: FrameSimulator):
    """One fault set per noise location of the compiled program."""
    faults = []
    for pos, instr in enumerate(sim.program):
        tag = instr[0]
        if tag in ("H", "S", "G1"):
            q = instr[1]
            for p in ("X", "Y", "Z"):
                faults.append([(pos, q, p)])
        elif tag == "CX":
            _, a, b = instr
            for k in range(1, 16):
                f = []
                pa = "IXZY"[(k & 1) + 2 * ((k & 2) >> 1)]
                pb = "IXZY"[((k & 4) >> 2) + 2 * ((k & 8) >> 3)]
                if pa != "I":
                    f.append((pos + 1, a, pa))
                if pb != "I":
                    f.append((pos + 1, b, pb))
                faults.append(f)
        elif tag == "M":
            _, q, m = instr
            faults.append([("record", m, "X")])
        elif tag == "R":
            q = instr[1]
            faults.append([(pos + 1, q, "X")])
    return faults


def propagate_faults(sim: FrameSimulator, faults):
    """Noiseless frame propagation of each fault set; returns (flips, fx, fz)."""
    B = len(faults)
    fx = np.zeros((B, sim.nq), dtype=np.uint8)
    fz = np.zeros((B, sim.nq), dtype=np.uint8)
    flips = np.zeros((B, sim.n_meas), dtype=np.uint8)
    pending: dict[int, list] = {}
    for row, flist in enumerate(faults):
        for where, q, p in flist:
            if where == "record":
                flips[row, q] ^= 1
            else:
                pending.setdefault(where, []).append((row, q, p))

    def inject(pos):
        for row, q, p in pending.get(pos, ()):
            if p in ("X", "Y"):
                fx[row, q] ^= 1
            if p in ("Z", "Y"):
                fz[row, q] ^= 1

    for pos, instr in enumerate(sim.program):
        inject(pos)
        tag = instr[0]
        if tag == "CX":
            _, a, b = instr
            fx[:, b] ^= fx[:, a]
            fz[:, a] ^= fz[:, b]
        elif tag == "H":
            q = instr[1]
            fx[:, q], fz[:, q] = fz[:, q].copy(), fx[:, q].copy()
        elif tag == "S":
            q = instr[1]
            fz[:, q] ^= fx[:, q]
        elif tag == "M":
            _, q, m = instr
            flips[:, m] ^= fx[:, q]
            fz[:, q] = 0
        elif tag == "R":
            _, q = instr
            fx[:, q] = 0
            fz[:, q] = 0
        elif tag == "VPAULI":
            _, kind, q, cond = instr
            mask = np.zeros(B, dtype=np.uint8)
            for m in cond:
                mask ^= flips[:, m]
            if kind == "X":
                fx[:, q] ^= mask
            else:
                fz[:, q] ^= mask
    inject(len(sim.program))
    return flips, fx, fz


def build_table(layout, mode: str) -> LookupTable:
    """Build the per-round lookup table for ``mode`` on ``layout``."""
    from .synthesis import synth_full_ec

    circuit = synth_full_ec(layout, mode)
    return build_table_from_circuit(circuit, layout.code(mode),
                                    layout.mode_data(mode), mode)


def build_table_from_circuit(circuit: PhysicalCircuit, code: StabilizerCode,
                             data_cells, mode: str,
                             rounds: list | None = None) -> LookupTable:
    """Exhaustive single-fault table for one EC-round circuit.

    ``rounds`` restricts the key to a subset of the circuit's measured
    rounds (used when one circuit hosts several logical blocks).
    """
    sim = FrameSimulator(circuit)
    data_cols = [sim.qubit_index[c] for c in data_cells]
    if rounds is None:
        rounds = circuit.meta["rounds"]
    key_bits, flag_bits, parity_bits = [], [], []
    for info in rounds:
        key_bits.append(info["parity"])
        parity_bits.append(info["parity"])
        for f in info["flags"]:
            key_bits.append(f)
            flag_bits.append(f)
    stab_of_parity = _match_stabs(rounds, code, data_cells)

    faults = enumerate_faults(sim)
    flips, fx, fz = propagate_faults(sim, faults)
    B = len(faults)

    table = LookupTable(mode=mode, key_bits=key_bits, flag_bits=flag_bits,
                        parity_bits=parity_bits,
                        stab_of_parity=stab_of_parity, n_data=code.n)

    def residual(row) -> PauliString:
        return PauliString(code.n, fx[row, data_cols].copy(),
                           fz[row, data_cols].copy())

    # Immediate entries: group faults by the bits one round shows.
    groups: dict[tuple[int, int], list[int]] = {}
    for row in range(B):
        _, bits = table.pack_bits(flips[row, key_bits])
        groups.setdefault((0, bits), []).append(row)

    corrections: list[PauliString] = [PauliString.identity(code.n)]
    corr_index: dict[bytes, int] = {corrections[0].key(): 0}

    def intern(p: PauliString) -> int:
        k = p.key()
        if k not in corr_index:
            corr_index[k] = len(corrections)
            corrections.append(p)
        return corr_index[k]

    immediate: dict[int, PauliString] = {}
    for (zero, bits), rows in sorted(groups.items()):
        cands = [residual(r) for r in rows]
        best = min(cands, key=lambda p: (p.weight, p.to_label()))
        immediate[bits] = best
        table.entries[(0, bits)] = intern(best)
    if 0 in immediate and immediate[0].weight:
        table.entries[(0, 0)] = 0

    # Follow-up entries: iterate the sliding-window decode over idealized
    # continuation rounds, adding (previous bits, next syndrome) entries
    # until every single fault's residual dies out.  A key demanded by two
    # logically inequivalent residuals is a genuine fault-tolerance
    # violation of the circuit.
    start: list[tuple[int, PauliString]] = []
    for (zero, bits), rows in sorted(groups.items()):
        c = corrections[table.entries[(0, bits)]]
        for r in rows:
            rho = apply_pauli(residual(r), c)
            if not code.is_trivial_error(rho):
                start.append((bits, rho))

    for _ in range(8):
        additions = False
        for bits0, rho0 in start:
            prev, rho = bits0, rho0
            for _round in range(6):
                if code.is_trivial_error(rho):
                    break
                cur = table.syndrome_key(code.syndrome(rho))
                key2 = (prev, cur)
                idx = table.entries.get(key2)
                if idx is None:
                    best = _min_weight_equivalent(code, rho)
                    table.entries[key2] = intern(best)
                    additions = True
                    idx = table.entries[key2]
                c2 = corrections[idx]
                new_rho = apply_pauli(rho, c2)
                if not code.is_trivial_error(new_rho):
                    same_syn = (table.syndrome_key(code.syndrome(new_rho))
                                == cur and key2 == (cur, cur))
                    if same_syn:
                        raise DecoderBuildError(
                            f"{mode}: follow-up key {key2} cannot settle "
                            f"residual {rho.to_label()}")
                prev, rho = cur, new_rho
            else:
                raise DecoderBuildError(
                    f"{mode}: residual {rho0.to_label()} from bits "
                    f"{bits0:#x} never settles")
        if not additions:
            break

    table.entries[(0, 0)] = 0
    table.corrections = np.stack(
        [np.stack([c.x, c.z]) for c in corrections]).astype(np.uint8)
    return table


def _min_weight_equivalent(code: StabilizerCode, p: PauliString) -> PauliString:
    """Cheapest stabilizer-equivalent form of a correction (small codes)."""
    best = p
    stabs = code.stabilizers
    n = len(stabs)
    if n > 16:
        return p
    for mask in range(1 << n):
        q = p
        m = mask
        i = 0
        while m:
            if m & 1:
                q = apply_pauli(q, stabs[i])
            m >>= 1
            i += 1
        if (q.weight, q.to_label()) < (best.weight, best.to_label()):
            best = q
    return best


def _match_stabs(rounds, code, data_cells) -> list[int]:
    cell_index = {c: i for i, c in enumerate(data_cells)}
    out = []
    for info in rounds:
        support = frozenset(cell_index[c] for c in info["data"])
        kind = info["kind"]
        for i, s in enumerate(code.stabilizers):
            s_kind = "X" if s.x.any() else "Z"
            s_supp = frozenset(int(q) for q in range(code.n)
                               if s.x[q] or s.z[q])
            if s_kind == kind and s_supp == support:
                out.append(i)
                break
        else:
            raise DecoderBuildError(
                f"round {info['label']} measures no code stabilizer")
    return out


def verify_single_fault_correction(circuit: PhysicalCircuit,
                                   table: LookupTable,
                                   code: StabilizerCode,
                                   data_cells) -> list[str]:
    """Exhaustive check: decode + follow-up leaves no logical residual.

    Every fault is propagated, corrected with the immediate entry, then
    handed to an ideal follow-up round (true syndrome keyed with this
    round's flags).  Returns failure descriptions (empty = sound).
    """
    sim = FrameSimulator(circuit)
    data_cols = [sim.qubit_index[c] for c in data_cells]
    faults = enumerate_faults(sim)
    flips, fx, fz = propagate_faults(sim, faults)
    failures = []
    for row in range(len(faults)):
        _, bits = table.pack_bits(flips[row, table.key_bits])
        c = table.corrections[table.lookup(0, bits)]
        rho = PauliString(code.n, fx[row, data_cols] ^ c[0],
                          fz[row, data_cols] ^ c[1])
        prev = bits
        for _round in range(6):
            if code.is_trivial_error(rho):
                break
            cur = table.syndrome_key(code.syndrome(rho))
            c2 = table.corrections[table.lookup(prev, cur)]
            rho = PauliString(code.n, rho.x ^ c2[0], rho.z ^ c2[1])
            prev = cur
        if not code.is_trivial_error(rho):
            failures.append(
                f"fault {faults[row]} -> residual {rho.to_label()}")
    return failures


def decode(table: LookupTable, bits, prev_flags: int = 0) -> PauliString:
    return table.decode_bits(bits, prev_flags)
