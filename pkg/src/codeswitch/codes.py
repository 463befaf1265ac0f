"""Stabilizer codes used by the changeable logical qubit.

Defines the [[7,1,3]] Steane code, the [[15,1,3]] quantum Reed-Muller code,
the Pauli algebra both are built on, and the abstract template of the
Steane <-> Reed-Muller switching protocol.

Qubit indexing convention (fixed throughout the package):

  * Steane data qubits are 0..6.  Qubit ``q`` is labelled by the nonzero
    3-bit vector ``q + 1``; the i-th stabilizer support is
    ``{q : bit_i(q + 1) == 1}``.
  * Reed-Muller data qubits are 0..14.  Qubit ``q`` is labelled by the
    nonzero 4-bit vector ``v(q)``: block one is ``0..6`` (``v = q + 1``,
    fourth bit clear), block two is ``7..13`` (``v = q - 6`` plus fourth
    bit), and the connector qubit 14 carries ``v = e4``.  Block one and
    block two are therefore two Steane blocks, mirrored qubit-for-qubit
    (``q`` <-> ``q + 7``), glued by the connector.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

STEANE_N = 7
RM_N = 15
CONNECTOR = 14  # Reed-Muller index of the connector qubit (q15 in 1-based talk)

# Block-two image of a block-one qubit.
BLOCK2_OFFSET = 7


class CodeError(ValueError):
    """Raised on malformed Pauli/code inputs (length mismatch, bad labels)."""


@dataclass
class PauliString:
    """n-qubit Pauli operator as X/Z bit-vectors with a +-1 sign.

    Y is represented as the product X*Z with the sign tracked modulo +-1
    only, which is all the Pauli-frame machinery needs.
    """

    n: int
    x: np.ndarray
    z: np.ndarray
    sign: int = 1

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.uint8) & 1
        self.z = np.asarray(self.z, dtype=np.uint8) & 1
        if self.x.shape != (self.n,) or self.z.shape != (self.n,):
            raise CodeError(f"bit-vector length must equal n={self.n}")
        if self.sign not in (1, -1):
            raise CodeError("sign must be +1 or -1")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8))

    @classmethod
    def from_label(cls, label: str, sign: int = 1) -> "PauliString":
        """Build from a string like ``"XZIY"`` (qubit 0 first)."""
        n = len(label)
        x = np.zeros(n, dtype=np.uint8)
        z = np.zeros(n, dtype=np.uint8)
        for i, ch in enumerate(label.upper()):
            if ch == "X":
                x[i] = 1
            elif ch == "Z":
                z[i] = 1
            elif ch == "Y":
                x[i] = 1
                z[i] = 1
            elif ch != "I":
                raise CodeError(f"unknown Pauli letter {ch!r}")
        return cls(n, x, z, sign)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliString":
        """Single-qubit X/Y/Z on ``qubit`` of an n-qubit register."""
        p = cls.identity(n)
        if kind in ("X", "Y"):
            p.x[qubit] = 1
        if kind in ("Z", "Y"):
            p.z[qubit] = 1
        if kind not in ("X", "Y", "Z"):
            raise CodeError(f"unknown Pauli kind {kind!r}")
        return p

    @classmethod
    def from_support(cls, n: int, support, kind: str) -> "PauliString":
        """X- or Z-type operator supported on the given qubit set."""
        p = cls.identity(n)
        idx = list(support)
        if kind == "X":
            p.x[idx] = 1
        elif kind == "Z":
            p.z[idx] = 1
        else:
            raise CodeError("kind must be 'X' or 'Z'")
        return p

    def to_label(self) -> str:
        out = []
        for xi, zi in zip(self.x, self.z):
            out.append("IXZY"[xi + 2 * zi] if (xi, zi) != (1, 1) else "Y")
        return "".join(out)

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def commutes_with(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise CodeError("length mismatch")
        anti = int(self.x @ other.z) + int(self.z @ other.x)
        return anti % 2 == 0

    def copy(self) -> "PauliString":
        return PauliString(self.n, self.x.copy(), self.z.copy(), self.sign)

    def key(self) -> bytes:
        """Hashable content key (ignores sign)."""
        return self.x.tobytes() + self.z.tobytes()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.n == other.n
            and self.sign == other.sign
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )


def apply_pauli(p: PauliString, q: PauliString) -> PauliString:
    """Group product p*q with +-1 sign tracking.

    Using the normal form s * X^x Z^z, reordering the Z-part of p past the
    X-part of q flips the sign once per overlapping position.
    """
    if p.n != q.n:
        raise CodeError(f"length mismatch: {p.n} != {q.n}")
    flips = int(p.z @ q.x) % 2
    sign = p.sign * q.sign * (-1 if flips else 1)
    return PauliString(p.n, p.x ^ q.x, p.z ^ q.z, sign)


@dataclass
class StabilizerCode:
    """A distance-3 CSS code with one logical qubit.

    ``transversal_gates`` maps a logical gate name to the physical gate
    applied on every data qubit (e.g. logical T on the Reed-Muller code is
    physical TDG on each of the 15 qubits).
    """

    name: str
    n: int
    k: int
    d: int
    stabilizers: list[PauliString]
    logical_x: PauliString
    logical_z: PauliString
    transversal_gates: dict[str, str] = field(default_factory=dict)

    def x_stabilizers(self) -> list[PauliString]:
        return [s for s in self.stabilizers if not s.z.any()]

    def z_stabilizers(self) -> list[PauliString]:
        return [s for s in self.stabilizers if not s.x.any()]

    def syndrome(self, err: PauliString) -> np.ndarray:
        """Anticommutation bit of ``err`` against each stabilizer, in order."""
        if err.n != self.n:
            raise CodeError("length mismatch")
        return np.array(
            [0 if s.commutes_with(err) else 1 for s in self.stabilizers],
            dtype=np.uint8,
        )

    def _stab_matrix(self) -> np.ndarray:
        rows = [np.concatenate([s.x, s.z]) for s in self.stabilizers]
        return np.array(rows, dtype=np.uint8)

    def in_stabilizer_group(self, p: PauliString) -> bool:
        """GF(2) membership test of ``p`` (sign ignored) in the group."""
        target = np.concatenate([p.x, p.z]).astype(np.uint8)
        mat = self._stab_matrix().copy()
        vec = target.copy()
        rows, cols = mat.shape
        pivot_row = 0
        for col in range(cols):
            pivots = [r for r in range(pivot_row, rows) if mat[r, col]]
            if not pivots:
                continue
            r = pivots[0]
            mat[[pivot_row, r]] = mat[[r, pivot_row]]
            for rr in range(rows):
                if rr != pivot_row and mat[rr, col]:
                    mat[rr] ^= mat[pivot_row]
            if vec[col]:
                vec ^= mat[pivot_row]
            pivot_row += 1
            if pivot_row == rows:
                break
        return not vec.any()

    def logical_action(self, p: PauliString) -> tuple[bool, bool]:
        """(flips logical Z, flips logical X) for a syndrome-free error."""
        return (
            not p.commutes_with(self.logical_z),
            not p.commutes_with(self.logical_x),
        )

    def is_trivial_error(self, p: PauliString) -> bool:
        """True if ``p`` has zero syndrome and trivial logical action."""
        return (
            not self.syndrome(p).any()
            and p.commutes_with(self.logical_x)
            and p.commutes_with(self.logical_z)
        )

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "n": self.n,
            "k": self.k,
            "d": self.d,
            "stabilizers": [s.to_label() for s in self.stabilizers],
            "logical_x": self.logical_x.to_label(),
            "logical_z": self.logical_z.to_label(),
        }
        return json.dumps(doc, indent=2)


def _bit(v: int, i: int) -> int:
    return (v >> i) & 1


def steane_support(i: int) -> list[int]:
    """Data qubits of the i-th Steane stabilizer (i in 0..2)."""
    return [q for q in range(STEANE_N) if _bit(q + 1, i)]


# Weight-3 logical representatives: {1,2,3} in 1-based labels is a line of
# the Fano plane, so it meets every stabilizer support evenly.
STEANE_LOGICAL_SUPPORT = (0, 1, 2)


def steane_code() -> StabilizerCode:
    """The [[7,1,3]] Steane code with the standard Hamming generators."""
    stabs = [
        PauliString.from_support(STEANE_N, steane_support(i), "X") for i in range(3)
    ] + [PauliString.from_support(STEANE_N, steane_support(i), "Z") for i in range(3)]
    return StabilizerCode(
        name="steane",
        n=STEANE_N,
        k=1,
        d=3,
        stabilizers=stabs,
        logical_x=PauliString.from_support(STEANE_N, STEANE_LOGICAL_SUPPORT, "X"),
        logical_z=PauliString.from_support(STEANE_N, STEANE_LOGICAL_SUPPORT, "Z"),
        transversal_gates={
            "H": "H",
            "S": "SDG",
            "SDG": "S",
            "X": "X",
            "Z": "Z",
            "CX": "CX",
        },
    )


def rm_weight8_support(i: int) -> list[int]:
    """Data qubits of the i-th weight-8 Reed-Muller support (i in 0..3).

    For i < 3 this is a Steane support plus its block-two mirror; i == 3 is
    all of block two plus the connector.
    """
    if i < 3:
        base = steane_support(i)
        return base + [q + BLOCK2_OFFSET for q in base]
    return list(range(BLOCK2_OFFSET, RM_N))


def rm_joint_support(i: int, j: int) -> list[int]:
    """Weight-4 joint support {q : bit_i and bit_j set}, both blocks."""
    base = [q for q in range(STEANE_N) if _bit(q + 1, i) and _bit(q + 1, j)]
    return base + [q + BLOCK2_OFFSET for q in base]


def rm_block2_support(i: int) -> list[int]:
    return [q + BLOCK2_OFFSET for q in steane_support(i)]


def rm_code() -> StabilizerCode:
    """The [[15,1,3]] punctured Reed-Muller code in the two-block layout."""
    stabs: list[PauliString] = []
    for i in range(4):
        stabs.append(PauliString.from_support(RM_N, rm_weight8_support(i), "X"))
    for i in range(4):
        stabs.append(PauliString.from_support(RM_N, rm_weight8_support(i), "Z"))
    for i, j in itertools.combinations(range(3), 2):
        stabs.append(PauliString.from_support(RM_N, rm_joint_support(i, j), "Z"))
    for i in range(3):
        stabs.append(PauliString.from_support(RM_N, rm_block2_support(i), "Z"))
    return StabilizerCode(
        name="rm15",
        n=RM_N,
        k=1,
        d=3,
        stabilizers=stabs,
        logical_x=PauliString.from_support(RM_N, range(STEANE_N), "X"),
        logical_z=PauliString.from_support(RM_N, range(STEANE_N), "Z"),
        transversal_gates={
            "T": "TDG",
            "TDG": "T",
            "S": "SDG",
            "SDG": "S",
            "X": "X",
            "Z": "Z",
            "CX": "CX",
        },
    )


# --- Code switching -------------------------------------------------------

STEANE_TO_RM = "steane_to_rm"
RM_TO_STEANE = "rm_to_steane"

# Block-two qubits the connector couples to: the image of the weight-3
# logical support, so the three fan-out CX gates turn the connector's |+>
# into a logical Bell pair with block two without disturbing its Z checks.
CONNECTOR_CX_PARTNERS = tuple(q + BLOCK2_OFFSET for q in STEANE_LOGICAL_SUPPORT)


@dataclass(frozen=True)
class SwitchStep:
    kind: str
    count: int = 1


@dataclass(frozen=True)
class CodeSwitchTemplate:
    """Abstract step inventory of one switching operation.

    Steps are direction-neutral labels; synthesis binds each label to the
    concrete circuit for the requested direction.  The reverse direction is
    the step-reversed template.
    """

    direction: str
    steps: tuple[SwitchStep, ...]

    def count(self, kind: str) -> int:
        return sum(s.count for s in self.steps if s.kind == kind)


_FORWARD_STEPS = (
    SwitchStep("connector_boundary"),      # prepare (S->RM) / measure (RM->S)
    SwitchStep("steane_ec_round", 3),
    SwitchStep("connector_cx", 3),
    SwitchStep("block_logical_cx"),
    SwitchStep("rm_ec_round", 1),
)


def switching_template(direction: str) -> CodeSwitchTemplate:
    if direction == STEANE_TO_RM:
        return CodeSwitchTemplate(direction, _FORWARD_STEPS)
    if direction == RM_TO_STEANE:
        return CodeSwitchTemplate(direction, tuple(reversed(_FORWARD_STEPS)))
    raise CodeError(f"unknown switching direction {direction!r}")
