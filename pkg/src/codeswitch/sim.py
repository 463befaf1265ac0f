"""Noisy stabilizer simulation of physical circuits.

Two engines share the circuit format:

* :func:`run_on_tableau` executes a circuit exactly on a stabilizer tableau
  (used for noiseless verification of synthesized gadgets and protocols).
* :class:`FrameSimulator` propagates batches of Pauli deviation frames
  through the circuit under the circuit noise model; measurement records
  are deviations from the noiseless reference, so EC-round records are
  syndromes directly.

Noise model: single-qubit depolarizing after every 1q gate (Identity
included), two-qubit depolarizing after every CX, X flips on measurement
records and on reset results, each with probability ``p``.  T/TDG layers
are frame-transparent (Pauli errors commute through up to an X<->Y mix
that is conservatively mapped to X); exact non-Clifford amplitudes are out
of scope and T ops are only accepted where synthesis sanctioned them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codes import PauliString, StabilizerCode
from .synthesis import PhysicalCircuit
from .tableau import TableauState


class SimulationError(ValueError):
    pass


@dataclass
class NoiseModel:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise SimulationError("error probability must lie in [0, 1]")


@dataclass
class TrialOutcome:
    syndromes: list[np.ndarray]
    logical_flip: dict[str, bool]
    flips: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))


# -- exact execution ----------------------------------------------------------


def run_on_tableau(circ: PhysicalCircuit, seed: int = 0,
                   state: TableauState | None = None,
                   qubit_index: dict | None = None,
                   inject: list[tuple[int, object, str]] = (),
                   ) -> tuple[list[int], TableauState, dict]:
    """Execute a circuit exactly; returns (outcomes, state, qubit_index).

    ``inject`` lists (op_position, cell, pauli) faults applied just before
    the op at that position.  T/TDG act as identity on the tableau and are
    rejected unless synthesis marked them as a transversal-T layer.
    """
    if qubit_index is None:
        qubit_index = {c: i for i, c in enumerate(circ.qubits())}
    if state is None:
        state = TableauState(len(qubit_index), seed=seed)
    outcomes: list[int] = [0] * circ.n_meas
    pending: dict[int, list[tuple[object, str]]] = {}
    for pos, cell, pauli in inject:
        pending.setdefault(pos, []).append((cell, pauli))
    for pos, op in enumerate(circ.ops):
        for cell, pauli in pending.get(pos, ()):  # injected faults
            q = qubit_index[cell]
            if pauli in ("X", "Y"):
                state.x_gate(q)
            if pauli in ("Z", "Y"):
                state.z_gate(q)
        if op.condition:
            parity = 0
            for m in op.condition:
                parity ^= outcomes[m]
            if not parity:
                continue
        qs = [qubit_index[c] for c in op.targets]
        kind = op.kind
        if kind == "CX":
            state.cx(qs[0], qs[1])
        elif kind == "H":
            state.h(qs[0])
        elif kind == "S":
            state.s(qs[0])
        elif kind == "SDG":
            state.sdg(qs[0])
        elif kind == "X":
            state.x_gate(qs[0])
        elif kind == "Z":
            state.z_gate(qs[0])
        elif kind == "I":
            pass
        elif kind in ("T", "TDG"):
            if not op.sanctioned_t:
                raise SimulationError(
                    "non-Clifford T outside a transversal-T layer")
        elif kind == "R":
            state.reset(qs[0])
        elif kind == "M":
            outcomes[op.meas_index] = state.measure(qs[0])[0]
        else:
            raise SimulationError(f"unknown op kind {kind!r}")
    return outcomes, state, qubit_index


# -- Pauli-frame engine -------------------------------------------------------

_OPC = {"CX": 0, "H": 1, "S": 2, "SDG": 2, "M": 3, "R": 4, "I": 5,
        "X": 5, "Z": 5, "T": 5, "TDG": 5, "VPAULI": 6, "DECODE": 7}


class FrameSimulator:
    """Vectorized Pauli-frame propagation of one circuit.

    Measurement records are deviation bits relative to the noiseless
    reference run, so parity/flag records are error syndromes and the
    conditional byproduct corrections fire exactly on record deviations.
    """

    def __init__(self, circ: PhysicalCircuit, qubit_index: dict | None = None):
        self.circuit = circ
        if qubit_index is None:
            qubit_index = {c: i for i, c in enumerate(circ.qubits())}
        self.qubit_index = qubit_index
        self.nq = len(qubit_index)
        self.n_meas = circ.n_meas
        self.program: list[tuple] = []
        self.decoders: list = []
        for op in circ.ops:
            if any(c not in qubit_index for c in op.targets):
                raise SimulationError(f"op targets outside qubit index: {op}")
            qs = tuple(qubit_index[c] for c in op.targets)
            if op.virtual:
                if op.kind not in ("X", "Z"):
                    raise SimulationError("virtual ops must be Pauli")
                self.program.append(("VPAULI", op.kind, qs[0],
                                     np.array(op.condition, dtype=np.int64)))
                continue
            code = _OPC[op.kind]
            if code == 0:
                self.program.append(("CX", qs[0], qs[1]))
            elif code == 1:
                self.program.append(("H", qs[0]))
            elif code == 2:
                self.program.append(("S", qs[0]))
            elif code == 3:
                self.program.append(("M", qs[0], op.meas_index))
            elif code == 4:
                self.program.append(("R", qs[0]))
            else:
                self.program.append(("G1", qs[0]))

    def attach_decoder(self, position_meas: int, fn) -> None:
        """Run ``fn(flips, fx, fz)`` right after measurement index fires."""
        self.decoders.append((position_meas, fn))

    def run(self, noise: NoiseModel, seed: int, batch: int,
            batch_index: int = 0,
            inject: list[tuple[int, int, str]] = (),
            ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Propagate ``batch`` frames; returns (flips, fx, fz).

        ``inject`` lists deterministic (program_position, qubit, pauli)
        faults applied to every frame in the batch just before that
        position (used by the decoder builder and tests).
        """
        rng = np.random.default_rng([seed, batch_index])
        p = noise.p
        B = batch
        fx = np.zeros((B, self.nq), dtype=np.uint8)
        fz = np.zeros((B, self.nq), dtype=np.uint8)
        flips = np.zeros((B, self.n_meas), dtype=np.uint8)
        pending: dict[int, list[tuple[int, str]]] = {}
        for pos, q, pauli in inject:
            pending.setdefault(pos, []).append((q, pauli))
        hooks = {m: fn for m, fn in self.decoders}

        def dep1(q):
            if p == 0.0:
                return
            r = rng.random(B)
            err = r < p
            if not err.any():
                return
            kind = rng.integers(0, 3, B)
            fx[:, q] ^= (err & (kind != 2)).astype(np.uint8)
            fz[:, q] ^= (err & (kind != 0)).astype(np.uint8)

        def dep2(a, b):
            if p == 0.0:
                return
            r = rng.random(B)
            err = r < p
            if not err.any():
                return
            kind = rng.integers(1, 16, B)
            fx[:, a] ^= (err & ((kind & 1) != 0)).astype(np.uint8)
            fz[:, a] ^= (err & ((kind & 2) != 0)).astype(np.uint8)
            fx[:, b] ^= (err & ((kind & 4) != 0)).astype(np.uint8)
            fz[:, b] ^= (err & ((kind & 8) != 0)).astype(np.uint8)

        for pos, instr in enumerate(self.program):
            for q, pauli in pending.get(pos, ()):
                if pauli in ("X", "Y"):
                    fx[:, q] ^= 1
                if pauli in ("Z", "Y"):
                    fz[:, q] ^= 1
            tag = instr[0]
            if tag == "CX":
                _, a, b = instr
                fx[:, b] ^= fx[:, a]
                fz[:, a] ^= fz[:, b]
                dep2(a, b)
            elif tag == "H":
                q = instr[1]
                fx[:, q], fz[:, q] = fz[:, q].copy(), fx[:, q].copy()
                dep1(q)
            elif tag == "S":
                q = instr[1]
                fz[:, q] ^= fx[:, q]
                dep1(q)
            elif tag == "G1":
                dep1(instr[1])
            elif tag == "M":
                _, q, m = instr
                rec = fx[:, q].copy()
                if p > 0.0:
                    rec ^= (rng.random(B) < p).astype(np.uint8)
                flips[:, m] = rec
                fz[:, q] = 0
                if m in hooks:
                    hooks[m](flips, fx, fz)
            elif tag == "R":
                _, q = instr
                fx[:, q] = 0
                fz[:, q] = 0
                if p > 0.0:
                    fx[:, q] = (rng.random(B) < p).astype(np.uint8)
            elif tag == "VPAULI":
                _, kind, q, cond = instr
                mask = np.zeros(B, dtype=np.uint8)
                for m in cond:
                    mask ^= flips[:, m]
                if kind == "X":
                    fx[:, q] ^= mask
                else:
                    fz[:, q] ^= mask
        return flips, fx, fz


# -- code-level helpers -------------------------------------------------------


def pauli_support_matrices(code: StabilizerCode, qubit_cols: list[int], nq: int):
    """Stabilizer X/Z matrices embedded at the given frame columns."""
    m = len(code.stabilizers)
    sx = np.zeros((m, nq), dtype=np.uint8)
    sz = np.zeros((m, nq), dtype=np.uint8)
    for i, s in enumerate(code.stabilizers):
        for j, col in enumerate(qubit_cols):
            sx[i, col] = s.x[j]
            sz[i, col] = s.z[j]
    return sx, sz


def syndrome_of_frames(fx, fz, sx, sz) -> np.ndarray:
    """Batch syndromes: anticommutation of frames with each stabilizer."""
    return ((fx @ sz.T) + (fz @ sx.T)) % 2


def build_code_correction_table(code: StabilizerCode) -> dict[tuple, PauliString]:
    """Ideal per-code decoder: syndrome -> min-weight correction (w <= 2)."""
    table: dict[tuple, PauliString] = {}

    def consider(p: PauliString):
        key = tuple(code.syndrome(p))
        best = table.get(key)
        if best is None or p.weight < best.weight or (
                p.weight == best.weight and p.to_label() < best.to_label()):
            table[key] = p

    consider(PauliString.identity(code.n))
    for q in range(code.n):
        for kind in "XZY":
            consider(PauliString.single(code.n, q, kind))
    for q1 in range(code.n):
        for q2 in range(q1 + 1, code.n):
            for k1 in "XZY":
                for k2 in "XZY":
                    from .codes import apply_pauli
                    consider(apply_pauli(PauliString.single(code.n, q1, k1),
                                         PauliString.single(code.n, q2, k2)))
    return table


# -- statistics ---------------------------------------------------------------


def wilson_interval(failures: int, trials: int, z: float = 1.96):
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    phat = failures / trials
    denom = 1 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials
                         + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class RateEstimate:
    rate: float
    ci_low: float
    ci_high: float
    failures: int
    trials: int


def estimate_rate(run_batch, p: float, seed: int, trials: int,
                  batch_size: int = 20000) -> RateEstimate:
    """Accumulate ``run_batch(p, seed, batch, idx) -> failures`` counts.

    Batches are independent counter-based streams, so the estimate does not
    depend on execution order.
    """
    done = 0
    fails = 0
    idx = 0
    while done < trials:
        b = min(batch_size, trials - done)
        fails += int(run_batch(p, seed, b, idx))
        done += b
        idx += 1
    lo, hi = wilson_interval(fails, done)
    return RateEstimate(fails / done, lo, hi, fails, done)


def adaptive_rate(run_batch, p: float, seed: int,
                  start: int = 10_000, cap: int = 10_000_000,
                  rel_halfwidth: float = 0.2) -> RateEstimate:
    """Grow trials x4 until the CI half-width is below 20% of the estimate."""
    trials = start
    total_f = 0
    total_n = 0
    idx = 0
    while True:
        while total_n < trials:
            b = min(50_000, trials - total_n)
            total_f += int(run_batch(p, seed, b, idx))
            total_n += b
            idx += 1
        lo, hi = wilson_interval(total_f, total_n)
        rate = total_f / total_n if total_n else 0.0
        if total_f > 0 and (hi - lo) / 2 <= rel_halfwidth * rate:
            return RateEstimate(rate, lo, hi, total_f, total_n)
        if total_n >= cap:
            return RateEstimate(rate, lo, hi, total_f, total_n)
        trials = min(cap, trials * 4)


def pseudo_threshold(rate_at, seed: int, p_lo: float = 1e-5,
                     p_hi: float = 1e-1, ratio: float = 1.2,
                     ) -> tuple[float, list[tuple[float, RateEstimate]]]:
    """Bisection for the crossing rate(p*) = p*.

    ``rate_at(p, seed)`` returns a RateEstimate.  Returns (p*, history);
    raises SimulationError when no crossing lies in the scanned range.
    """
    history: list[tuple[float, RateEstimate]] = []

    def above(p: float) -> bool:
        est = rate_at(p, seed)
        history.append((p, est))
        return est.rate > p

    lo, hi = p_lo, p_hi
    if above(lo):
        raise SimulationError("logical rate above physical at lower scan edge")
    if not above(hi):
        raise SimulationError("no crossing found in scan range")
    while hi / lo > ratio:
        mid = math.sqrt(lo * hi)
        if above(mid):
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi), history


def sweep_csv(points: list[tuple[float, RateEstimate]]) -> str:
    lines = ["p_e,rate,ci_low,ci_high,trials"]
    for p, est in points:
        lines.append(f"{p:.6g},{est.rate:.6g},{est.ci_low:.6g},"
                     f"{est.ci_high:.6g},{est.trials}")
    return "\n".join(lines) + "\n"
