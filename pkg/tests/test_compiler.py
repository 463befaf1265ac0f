import numpy as np
import pytest

from codeswitch.compiler import (
    CompileError,
    CostModel,
    LogicalInstr,
    LogicalProgram,
    agnostic_cs,
    block_pass,
    commutes,
    evaluate,
    parse_program,
    route,
    to_qasm,
    toffoli_program,
    validate_modes,
)

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
S = np.diag([1, 1j])
T = np.diag([1, np.exp(1j * np.pi / 4)])
X = np.array([[0, 1], [1, 0]])
Z = np.diag([1, -1])
I2 = np.eye(2)
GATE1 = {"H": H, "S": S, "SDG": S.conj().T, "T": T, "TDG": T.conj().T,
         "X": X, "Z": Z}


def unitary_of(program: LogicalProgram) -> np.ndarray:
    """Exact matrix (CS/EC as identity); qubit 0 = least significant."""
    n = program.n_qubits
    U = np.eye(2 ** n, dtype=complex)
    for ins in program.instrs:
        if ins.op in ("EC", "CS_TO_RM", "CS_TO_STEANE"):
            continue
        if ins.op in GATE1:
            g = GATE1[ins.op]
            ops = [g if i == ins.qubits[0] else I2 for i in range(n)]
            M = ops[-1]
            for o in reversed(ops[:-1]):
                M = np.kron(M, o)
        elif ins.op in ("CX", "SWAP"):
            c, t = ins.qubits
            M = np.zeros((2 ** n, 2 ** n), dtype=complex)
            for b in range(2 ** n):
                if ins.op == "CX":
                    out = b ^ (((b >> c) & 1) << t)
                else:
                    bc, bt = (b >> c) & 1, (b >> t) & 1
                    out = b ^ ((bc ^ bt) << c) ^ ((bc ^ bt) << t)
                M[out, b] = 1
        else:
            raise AssertionError(ins.op)
        U = M @ U
    return U


def same_up_to_phase(a: np.ndarray, b: np.ndarray) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    if abs(b[idx]) < 1e-12:
        return False
    phase = a[idx] / b[idx]
    return np.allclose(a, phase * b, atol=1e-9)


def test_parse_basics():
    prog = parse_program("OPENQASM 2.0;\nqreg q[2];\nt q[0];\ncx q[0],q[1];\n")
    assert [i.op for i in prog.instrs] == ["T", "CX"]
    assert prog.instrs[1].qubits == (0, 1)


def test_parse_rejects_non_clifford_t():
    with pytest.raises(CompileError, match="decompose to Clifford\\+T"):
        parse_program("qreg q[3];\nccx q[0],q[1],q[2];\n")


def test_parse_errors_carry_line():
    with pytest.raises(CompileError, match="line 3"):
        parse_program("OPENQASM 2.0;\nqreg q[1];\nfrobnicate q[0];\n")


def test_measure_ignored_with_warning():
    with pytest.warns(UserWarning):
        prog = parse_program("qreg q[1];\nh q[0];\nmeasure q[0] -> c[0];\n")
    assert len(prog.instrs) == 1


def grid_graph(rows, cols, diagonal=False):
    g = {}
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            g.setdefault(u, {})
            for dr, dc, w in [(0, 1, 1.0), (1, 0, 1.0)] + (
                    [(1, 1, 1.3), (1, -1, 1.3)] if diagonal else []):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    v = rr * cols + cc
                    g[u][v] = w
                    g.setdefault(v, {})[u] = w
    return g


def test_route_noop_when_coupled():
    prog = parse_program("qreg q[2];\ncx q[0],q[1];\n")
    routed = route(prog, grid_graph(1, 2))
    assert routed.counts().get("SWAP", 0) == 0


def test_route_diagonal_on_grid4_needs_one_swap():
    # Qubits 0 and 3 sit diagonally on a 2x2 grid: one SWAP then one CX.
    prog = LogicalProgram(4, [LogicalInstr("CX", (0, 3))])
    routed = route(prog, grid_graph(2, 2))
    assert routed.counts()["SWAP"] == 1
    assert routed.counts()["CX"] == 1


def test_route_diagonal_on_grid8_direct():
    prog = LogicalProgram(4, [LogicalInstr("CX", (0, 3))])
    routed = route(prog, grid_graph(2, 2, diagonal=True))
    assert routed.counts().get("SWAP", 0) == 0


def test_route_preserves_semantics():
    # Routed output acts on slots; undoing the final placement permutation
    # must recover the input unitary.
    rng = np.random.default_rng(5)
    for trial in range(20):
        prog = random_clifford_t(4, 12, rng)
        routed = route(prog, grid_graph(2, 2))
        n = prog.n_qubits
        pos = routed.final_positions
        P = np.zeros((2 ** n, 2 ** n))
        for b in range(2 ** n):
            out = 0
            for i in range(n):
                out |= ((b >> i) & 1) << pos[i]
            P[out, b] = 1
        assert same_up_to_phase(unitary_of(routed), P @ unitary_of(prog))


def test_agnostic_toffoli():
    rep = evaluate(agnostic_cs(toffoli_program()))
    assert rep.cs_count == 14
    assert abs(rep.infidelity - 82.0) < 1e-9
    assert abs(rep.latency - 167.8) < 1e-9


def test_aware_toffoli():
    rep = evaluate(block_pass(toffoli_program()))
    assert rep.cs_count == 6
    assert abs(rep.infidelity - 80.4) < 1e-9
    assert abs(rep.latency - 105.4) < 1e-9


def test_eq1_pattern_saves_two_switches():
    prog = parse_program(
        "qreg q[2];\nt q[0];\nt q[1];\ncx q[0],q[1];\nt q[1];\n")
    assert agnostic_cs(prog).cs_count() == 6
    aware = block_pass(prog)
    assert aware.cs_count() == 4
    # Delay profitability under the defaults: 2 * 4.1 >= 8.8 - 1.0.
    cost = CostModel()
    assert 2 * cost.infidelity["cs"] >= (cost.infidelity["rm_cx"]
                                         - cost.infidelity["steane_cx"])


def test_t_followed_by_h_gives_no_opportunities():
    text = "qreg q[2];\n" + "t q[0];\nh q[0];\nt q[1];\nh q[1];\n" * 3
    prog = parse_program(text)
    assert block_pass(prog).cs_count() == agnostic_cs(prog).cs_count()


def test_t_free_circuit_has_no_switches():
    prog = parse_program("qreg q[2];\nh q[0];\ncx q[0],q[1];\nz q[1];\n")
    assert agnostic_cs(prog).cs_count() == 0
    assert block_pass(prog).cs_count() == 0


def test_mode_validation_rejects_t_in_steane():
    prog = LogicalProgram(1, [LogicalInstr("T", (0,))])
    with pytest.raises(CompileError):
        validate_modes(prog)


def test_commutation_rules_match_matrices():
    # Every rule the rewriter may use is checked against exact matrices.
    cases = [
        (LogicalInstr("X", (1,)), LogicalInstr("CX", (0, 1))),   # X via target
        (LogicalInstr("Z", (0,)), LogicalInstr("CX", (0, 1))),   # Z via control
        (LogicalInstr("T", (0,)), LogicalInstr("CX", (0, 1))),
        (LogicalInstr("S", (0,)), LogicalInstr("CX", (0, 1))),
        (LogicalInstr("CX", (0, 1)), LogicalInstr("CX", (0, 2))),  # shared ctl
        (LogicalInstr("CX", (0, 2)), LogicalInstr("CX", (1, 2))),  # shared tgt
        (LogicalInstr("T", (0,)), LogicalInstr("Z", (0,))),
        (LogicalInstr("X", (0,)), LogicalInstr("X", (0,))),
    ]
    noncommuting = [
        (LogicalInstr("X", (0,)), LogicalInstr("CX", (0, 1))),
        (LogicalInstr("Z", (1,)), LogicalInstr("CX", (0, 1))),
        (LogicalInstr("T", (1,)), LogicalInstr("CX", (0, 1))),
        (LogicalInstr("CX", (0, 1)), LogicalInstr("CX", (1, 2))),
        (LogicalInstr("H", (0,)), LogicalInstr("T", (0,))),
    ]
    for g1, g2 in cases:
        assert commutes(g1, g2)
        n = max(max(g1.qubits), max(g2.qubits)) + 1
        a = unitary_of(LogicalProgram(n, [g1, g2]))
        b = unitary_of(LogicalProgram(n, [g2, g1]))
        assert same_up_to_phase(a, b)
    for g1, g2 in noncommuting:
        assert not commutes(g1, g2)
        n = max(max(g1.qubits), max(g2.qubits)) + 1
        a = unitary_of(LogicalProgram(n, [g1, g2]))
        b = unitary_of(LogicalProgram(n, [g2, g1]))
        assert not same_up_to_phase(a, b)


def random_clifford_t(n_qubits, n_gates, rng) -> LogicalProgram:
    ops = ["H", "S", "SDG", "T", "TDG", "X", "Z", "CX", "CX"]
    instrs = []
    for _ in range(n_gates):
        op = ops[rng.integers(0, len(ops))]
        if op == "CX":
            a, b = rng.choice(n_qubits, size=2, replace=False)
            instrs.append(LogicalInstr("CX", (int(a), int(b))))
        else:
            instrs.append(LogicalInstr(op, (int(rng.integers(0, n_qubits)),)))
    return LogicalProgram(n_qubits, instrs)


def test_block_pass_soundness_on_random_circuits():
    rng = np.random.default_rng(2024)
    for trial in range(120):
        prog = random_clifford_t(4, 30, rng)
        aware = block_pass(prog)
        validate_modes(aware)
        agn = agnostic_cs(prog)
        assert aware.cs_count() <= agn.cs_count()
        assert (evaluate(aware).infidelity
                <= evaluate(agn).infidelity + 1e-9)
        assert same_up_to_phase(unitary_of(aware), unitary_of(prog))


def test_evaluate_empty_program():
    rep = evaluate(LogicalProgram(2, []))
    assert rep.infidelity == 0 and rep.latency == 0 and rep.cs_count == 0


def test_qasm_roundtrip():
    prog = toffoli_program()
    again = parse_program(to_qasm(prog))
    assert again.instrs == prog.instrs
