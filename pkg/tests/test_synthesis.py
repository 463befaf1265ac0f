import numpy as np
import pytest

from codeswitch.codes import PauliString
from codeswitch.geometry import StabTree
from codeswitch.sim import run_on_tableau
from codeswitch.synthesis import (
    PhysicalCircuit,
    SynthesisError,
    ec_round_ops,
    remote_cx_ops,
)
from codeswitch.tableau import TableauState


def fig3_tree():
    # Parity s with data a,b adjacent; flag f bridges data c,d.
    s, f = (1, 1), (1, 2)
    a, b, c, d = (0, 1), (2, 1), (0, 2), (2, 2)
    tree = StabTree(root=s, internal=[f], parent={f: s},
                    data_parent={a: s, b: s, c: f, d: f}, flags=[f])
    tree.validate()
    return tree, [a, b, c, d]


def test_scheduler_and_latency():
    circ = PhysicalCircuit()
    circ.append("H", 0)
    circ.append("CX", 0, 1)
    circ.append("CX", 2, 3)
    circ.append("CX", 1, 2)
    circ.schedule()
    # The disjoint CX on (2,3) packs into step 0 alongside the H.
    steps = [op.time_step for op in circ.ops]
    assert steps == [0, 1, 0, 2]
    assert circ.latency == 3
    circ.validate()


def test_identity_padding_counts_noise_locations():
    circ = PhysicalCircuit()
    circ.declare([0, 1, 2])
    circ.append("H", 0)
    circ.append("CX", 0, 1)
    circ.schedule()
    padded = circ.pad_identities()
    # Step 0: H + 2 idle; step 1: CX + 1 idle.
    assert padded.noise_locations() == 2 + 2 + 1
    padded.validate()


def test_ec_round_z_type_parity_and_count():
    tree, data = fig3_tree()
    circ = PhysicalCircuit()
    circ.declare(data)
    info = ec_round_ops(circ, tree, "Z", data, "s0")
    circ.schedule()
    assert sum(1 for op in circ.ops if op.kind == "CX") == 6 == tree.cx_cost
    # Noiseless round on |0000> data: parity and flag both deterministic 0.
    outcomes, _, _ = run_on_tableau(circ, seed=5)
    assert outcomes[info["parity"]] == 0
    assert [outcomes[i] for i in info["flags"]] == [0]


@pytest.mark.parametrize("hit", [(0, 1), (2, 1), (0, 2), (2, 2)])
def test_ec_round_detects_single_x(hit):
    tree, data = fig3_tree()
    circ = PhysicalCircuit()
    circ.declare(data)
    info = ec_round_ops(circ, tree, "Z", data, "s0")
    circ.schedule()
    outcomes, _, _ = run_on_tableau(circ, seed=1, inject=[(0, hit, "X")])
    assert outcomes[info["parity"]] == 1


def test_ec_round_x_type_detects_z():
    tree, data = fig3_tree()
    circ = PhysicalCircuit()
    circ.declare(data)
    info = ec_round_ops(circ, tree, "X", data, "s0")
    circ.schedule()
    # X-type parity on |+>^4 data is deterministic 0; a Z error flips it.
    prep = PhysicalCircuit()
    prep.declare(circ.qubits())
    for d in data:
        prep.append("H", d)
    full = PhysicalCircuit()
    full.declare(circ.qubits())
    full.extend(prep)
    remap = full.extend(circ)
    full.schedule()
    outcomes, _, _ = run_on_tableau(full, seed=2)
    assert outcomes[remap[info["parity"]]] == 0
    outcomes, _, _ = run_on_tableau(
        full, seed=3, inject=[(len(prep.ops), data[2], "Z")])
    assert outcomes[remap[info["parity"]]] == 1


def test_flag_z_fault_flips_flag_and_correlates():
    # A Z fault on the flag right after the open CX must flip the flag and
    # leave a correlated Z pair on the bridged data {c, d} (up to frame).
    tree, data = fig3_tree()
    circ = PhysicalCircuit()
    circ.declare(data)
    info = ec_round_ops(circ, tree, "Z", data, "s0")
    circ.schedule()
    # Position right after the first CX op (the open) in program order.
    first_cx = next(i for i, op in enumerate(circ.ops) if op.kind == "CX")
    # Data in |+...+> so residual Z errors show up as X-basis flips.
    full = PhysicalCircuit()
    full.declare(circ.qubits())
    for d in data:
        full.append("H", d)
    n_prep = len(full.ops)
    remap = full.extend(circ)
    for d in data:
        full.append("H", d)
        full.append("M", d, role="data")
    full.schedule()
    flag = remap[info["flags"][0]]

    base, _, _ = run_on_tableau(full, seed=9)
    fault, _, _ = run_on_tableau(full, seed=9,
                                 inject=[(n_prep + first_cx + 1, (1, 2), "Z")])
    assert fault[flag] == base[flag] ^ 1
    data_meas = {op.targets[0]: op.meas_index for op in full.ops
                 if op.kind == "M" and op.role == "data"}
    diff = {d: base[data_meas[d]] ^ fault[data_meas[d]] for d in data}
    assert diff[(0, 2)] == 1 and diff[(2, 2)] == 1
    assert diff[(0, 1)] == 0 and diff[(2, 1)] == 0


def _choi_check_remote_cx(k: int, seed: int):
    """Channel identity check: gadget on (a,b) equals ideal CX via Choi pairs."""
    a, b = (0, 0), (0, k + 1)
    path = [(0, i) for i in range(1, k + 1)]
    ra, rb = (9, 0), (9, 1)
    circ = PhysicalCircuit()
    circ.declare([ra, a, rb, b] + path)
    circ.append("H", ra)
    circ.append("CX", ra, a)
    circ.append("H", rb)
    circ.append("CX", rb, b)
    remote_cx_ops(circ, a, b, path)
    circ.schedule()
    outcomes, state, qidx = run_on_tableau(circ, seed=seed)
    n = len(qidx)

    def pauli(spec):
        p = PauliString.identity(n)
        for cell, kind in spec:
            q = qidx[cell]
            if kind in ("X", "Y"):
                p.x[q] = 1
            if kind in ("Z", "Y"):
                p.z[q] = 1
        return p

    assert state.expectation(pauli([(ra, "X"), (a, "X"), (b, "X")])) == 1
    assert state.expectation(pauli([(ra, "Z"), (a, "Z")])) == 1
    assert state.expectation(pauli([(rb, "X"), (b, "X")])) == 1
    assert state.expectation(pauli([(rb, "Z"), (a, "Z"), (b, "Z")])) == 1


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4, 5])
def test_remote_cx_equals_cx(k):
    for seed in (0, 1, 2, 3, 4):
        _choi_check_remote_cx(k, seed)


def test_remote_cx_cost_and_depth():
    k = 5
    a, b = (0, 0), (0, k + 1)
    path = [(0, i) for i in range(1, k + 1)]
    circ = PhysicalCircuit()
    remote_cx_ops(circ, a, b, path)
    circ.schedule()
    n_cx = sum(1 for op in circ.ops if op.kind == "CX" and not op.virtual)
    assert n_cx == k + 1  # REM-CX length = GHZ path length + 1
    circ.validate()


def test_circuit_text_format():
    circ = PhysicalCircuit()
    circ.append("R", (0, 0))
    circ.append("H", (0, 0))
    circ.append("M", (0, 0), role="parity:s0")
    circ.schedule()
    text = circ.to_text()
    assert "TICK" in text
    assert "# role: parity:s0" in text
    assert text.startswith("R 0.0")


def test_cx_rejects_bad_targets():
    circ = PhysicalCircuit()
    with pytest.raises(SynthesisError):
        circ.append("CX", (0, 0), (0, 0))
