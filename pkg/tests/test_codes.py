import itertools

import numpy as np
import pytest

from codeswitch.codes import (
    CONNECTOR_CX_PARTNERS,
    RM_TO_STEANE,
    STEANE_TO_RM,
    CodeError,
    PauliString,
    apply_pauli,
    rm_code,
    steane_code,
    switching_template,
)


def test_steane_shape():
    code = steane_code()
    assert code.n == 7
    assert code.k == 1 and code.d == 3
    assert len(code.stabilizers) == 6
    assert len(code.x_stabilizers()) == 3
    assert len(code.z_stabilizers()) == 3
    for s in code.stabilizers:
        assert s.weight == 4


def test_rm_shape():
    code = rm_code()
    assert code.n == 15
    assert len(code.stabilizers) == 14
    assert len(code.x_stabilizers()) == 4
    weights = sorted(s.weight for s in code.stabilizers)
    assert weights.count(8) == 8
    assert weights.count(4) == 6


@pytest.mark.parametrize("code", [steane_code(), rm_code()])
def test_stabilizers_commute_and_logicals_anticommute(code):
    for a, b in itertools.combinations(code.stabilizers, 2):
        assert a.commutes_with(b)
    for s in code.stabilizers:
        assert s.commutes_with(code.logical_x)
        assert s.commutes_with(code.logical_z)
    assert not code.logical_x.commutes_with(code.logical_z)


def test_steane_single_x_errors_have_distinct_z_syndromes():
    # Oracle: exhaustive enumeration of the 7 errors against the 3 Z generators.
    code = steane_code()
    z_stabs = code.z_stabilizers()
    seen = set()
    for q in range(7):
        err = PauliString.single(7, q, "X")
        syn = tuple(0 if s.commutes_with(err) else 1 for s in z_stabs)
        assert any(syn)
        seen.add(syn)
    assert len(seen) == 7


def test_rm_single_z_errors_have_distinct_x_syndromes():
    code = rm_code()
    x_stabs = code.x_stabilizers()
    seen = set()
    for q in range(15):
        err = PauliString.single(15, q, "Z")
        syn = tuple(0 if s.commutes_with(err) else 1 for s in x_stabs)
        assert any(syn)
        seen.add(syn)
    assert len(seen) == 15


@pytest.mark.parametrize("code", [steane_code(), rm_code()])
def test_every_weight1_error_detected(code):
    for q in range(code.n):
        for kind in "XYZ":
            err = PauliString.single(code.n, q, kind)
            assert code.syndrome(err).any()


@pytest.mark.parametrize("code", [steane_code(), rm_code()])
def test_stabilizer_generators_independent(code):
    mat = np.array(
        [np.concatenate([s.x, s.z]) for s in code.stabilizers], dtype=np.uint8
    )
    # GF(2) rank via elimination.
    mat = mat.copy()
    rank = 0
    for col in range(mat.shape[1]):
        rows = [r for r in range(rank, mat.shape[0]) if mat[r, col]]
        if not rows:
            continue
        mat[[rank, rows[0]]] = mat[[rows[0], rank]]
        for r in range(mat.shape[0]):
            if r != rank and mat[r, col]:
                mat[r] ^= mat[rank]
        rank += 1
    assert rank == len(code.stabilizers)


def test_pauli_product_involution_and_y():
    x0 = PauliString.from_label("XI")
    assert apply_pauli(x0, x0) == PauliString.identity(2)
    z0 = PauliString.from_label("ZI")
    prod = apply_pauli(x0, z0)
    assert prod.x[0] == 1 and prod.z[0] == 1
    # XZ = -ZX: recomposing in the other order flips the sign.
    assert apply_pauli(z0, x0).sign == -prod.sign


def test_pauli_product_associative():
    rng = np.random.default_rng(7)
    for _ in range(50):
        ps = [
            PauliString(4, rng.integers(0, 2, 4), rng.integers(0, 2, 4),
                        int(rng.choice([1, -1])))
            for _ in range(3)
        ]
        a, b, c = ps
        assert apply_pauli(apply_pauli(a, b), c) == apply_pauli(a, apply_pauli(b, c))


def test_pauli_length_mismatch_rejected():
    with pytest.raises(CodeError):
        apply_pauli(PauliString.identity(2), PauliString.identity(3))


@pytest.mark.parametrize("code", [steane_code(), rm_code()])
def test_generator_products_stay_in_group(code):
    # Closure oracle over all generator pairs.
    for a, b in itertools.combinations(code.stabilizers, 2):
        prod = apply_pauli(a, b)
        assert code.in_stabilizer_group(prod)
        for s in code.stabilizers:
            assert prod.commutes_with(s)


def test_transversal_sets_disjoint_exactly_on_t_and_h():
    steane = set(steane_code().transversal_gates)
    rm = set(rm_code().transversal_gates)
    assert steane ^ rm == {"T", "TDG", "H"}
    assert "T" in rm and "H" in steane
    assert {"CX", "X", "Z"} <= steane & rm


def test_switching_template_counts():
    fwd = switching_template(STEANE_TO_RM)
    assert fwd.count("connector_cx") == 3
    assert fwd.count("steane_ec_round") == 3
    assert fwd.count("rm_ec_round") == 1
    assert fwd.count("block_logical_cx") == 1
    assert fwd.count("connector_boundary") == 1


def test_switching_template_reversal():
    fwd = switching_template(STEANE_TO_RM)
    rev = switching_template(RM_TO_STEANE)
    assert tuple(reversed(fwd.steps)) == rev.steps
    with pytest.raises(CodeError):
        switching_template("sideways")


def test_connector_partners_preserve_block2_z_checks():
    # The fan-out support must meet every Steane Z check evenly, otherwise
    # the connector CX gates would corrupt block two's Z stabilizers.
    code = steane_code()
    support = {q - 7 for q in CONNECTOR_CX_PARTNERS}
    for s in code.z_stabilizers():
        overlap = sum(1 for q in support if s.z[q])
        assert overlap % 2 == 0


def test_code_json_roundtrip_labels():
    import json

    doc = json.loads(steane_code().to_json())
    assert doc["name"] == "steane"
    assert doc["n"] == 7
    assert len(doc["stabilizers"]) == 6
    assert all(len(lbl) == 7 for lbl in doc["stabilizers"])
