"""Aaronson-Gottesman stabilizer tableau simulation.

Tracks n destabilizer and n stabilizer generators as X/Z bit matrices with
phases mod 4 (states only ever hold phases 0 or 2, i.e. +-1).  Supports the
Clifford gates used by the synthesized circuits plus single-qubit Z-basis
measurement and reset.  Used for exact noiseless verification; the
Monte-Carlo path lives in :mod:`codeswitch.sim` as a Pauli-frame simulator.
"""

from __future__ import annotations

import numpy as np

from .codes import PauliString


class TableauState:
    """Stabilizer state of ``n`` qubits, initialized to |0...0>."""

    def __init__(self, n: int, seed: int | None = None):
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)  # phase exponent of i, mod 4
        for i in range(n):
            self.x[i, i] = 1
            self.z[n + i, i] = 1
        self.rng = np.random.default_rng(seed)

    # -- internal helpers ---------------------------------------------------

    def _g_sum(self, x1, z1, x2, z2) -> int:
        """Sum over qubits of the i-exponent from multiplying P1 by P2."""
        g = np.zeros(len(x1), dtype=np.int64)
        y1 = (x1 == 1) & (z1 == 1)
        xo = (x1 == 1) & (z1 == 0)
        zo = (x1 == 0) & (z1 == 1)
        g[y1] = z2[y1].astype(np.int64) - x2[y1].astype(np.int64)
        g[xo] = z2[xo].astype(np.int64) * (2 * x2[xo].astype(np.int64) - 1)
        g[zo] = x2[zo].astype(np.int64) * (1 - 2 * z2[zo].astype(np.int64))
        return int(g.sum())

    def _rowsum(self, h: int, i: int) -> None:
        """Row h := row i * row h (phase-correct multiplication)."""
        phase = 2 * self.r[h] + 2 * self.r[i] if False else None
        g = self._g_sum(self.x[i], self.z[i], self.x[h], self.z[h])
        self.r[h] = (int(self.r[h]) + int(self.r[i]) + g) % 4
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def _rowsum_into(self, acc_x, acc_z, acc_r, i: int):
        g = self._g_sum(self.x[i], self.z[i], acc_x, acc_z)
        acc_r = (acc_r + int(self.r[i]) + g) % 4
        acc_x ^= self.x[i]
        acc_z ^= self.z[i]
        return acc_x, acc_z, acc_r

    # -- gates --------------------------------------------------------------

    def h(self, q: int) -> None:
        self.r = (self.r + 2 * (self.x[:, q] & self.z[:, q])) % 4
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q: int) -> None:
        self.r = (self.r + 2 * (self.x[:, q] & self.z[:, q])) % 4
        self.z[:, q] ^= self.x[:, q]

    def sdg(self, q: int) -> None:
        self.r = (self.r + 2 * (self.x[:, q] & (1 ^ self.z[:, q]))) % 4
        self.z[:, q] ^= self.x[:, q]

    def x_gate(self, q: int) -> None:
        self.r = (self.r + 2 * self.z[:, q]) % 4

    def z_gate(self, q: int) -> None:
        self.r = (self.r + 2 * self.x[:, q]) % 4

    def y_gate(self, q: int) -> None:
        self.r = (self.r + 2 * (self.x[:, q] ^ self.z[:, q])) % 4

    def cx(self, c: int, t: int) -> None:
        self.r = (
            self.r
            + 2 * (self.x[:, c] & self.z[:, t] & (self.x[:, t] ^ self.z[:, c] ^ 1))
        ) % 4
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    # -- measurement --------------------------------------------------------

    def measure(self, q: int, forced: int | None = None) -> tuple[int, bool]:
        """Z-basis measurement of qubit ``q``.

        Returns (outcome, was_random).  ``forced`` pins the outcome of a
        random measurement (error for a deterministic one that disagrees).
        """
        n = self.n
        anticommuting = [p for p in range(n, 2 * n) if self.x[p, q]]
        if anticommuting:
            p = anticommuting[0]
            for i in list(range(2 * n)):
                if i != p and self.x[i, q]:
                    self._rowsum(i, p)
            self.x[p - n] = self.x[p].copy()
            self.z[p - n] = self.z[p].copy()
            self.r[p - n] = self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, q] = 1
            outcome = int(self.rng.integers(0, 2)) if forced is None else int(forced)
            self.r[p] = 2 * outcome
            return outcome, True
        # Deterministic: accumulate the product of stabilizers that mirror
        # the destabilizers anticommuting with Z_q.
        acc_x = np.zeros(n, dtype=np.uint8)
        acc_z = np.zeros(n, dtype=np.uint8)
        acc_r = 0
        for i in range(n):
            if self.x[i, q]:
                acc_x, acc_z, acc_r = self._rowsum_into(acc_x, acc_z, acc_r, n + i)
        outcome = 0 if acc_r % 4 == 0 else 1
        if forced is not None and forced != outcome:
            raise ValueError(f"measurement of qubit {q} is deterministic ({outcome})")
        return outcome, False

    def reset(self, q: int) -> None:
        outcome, _ = self.measure(q)
        if outcome:
            self.x_gate(q)

    # -- inspection ---------------------------------------------------------

    def apply_pauli_string(self, p: PauliString) -> None:
        if p.n != self.n:
            raise ValueError("length mismatch")
        for q in range(self.n):
            if p.x[q] and p.z[q]:
                self.y_gate(q)
            elif p.x[q]:
                self.x_gate(q)
            elif p.z[q]:
                self.z_gate(q)

    def expectation(self, p: PauliString) -> int:
        """<P> for a Pauli observable: +1, -1, or 0 (indefinite)."""
        if p.n != self.n:
            raise ValueError("length mismatch")
        n = self.n
        # Anticommutes with some stabilizer -> expectation 0.
        anti = (self.x[n:] @ p.z + self.z[n:] @ p.x) % 2
        if anti.any():
            return 0
        acc_x = np.zeros(n, dtype=np.uint8)
        acc_z = np.zeros(n, dtype=np.uint8)
        acc_r = 0
        for i in range(n):
            # Destabilizer i anticommutes with P -> stabilizer i is a factor.
            if (int(self.x[i] @ p.z) + int(self.z[i] @ p.x)) % 2:
                acc_x, acc_z, acc_r = self._rowsum_into(acc_x, acc_z, acc_r, n + i)
        if not (np.array_equal(acc_x, p.x) and np.array_equal(acc_z, p.z)):
            return 0  # commutes with the group but is not in it (logical op)
        if acc_r % 4 == 0:
            return p.sign
        if acc_r % 4 == 2:
            return -p.sign
        raise AssertionError("stabilizer product acquired an imaginary phase")

    def stabilizer_labels(self) -> list[str]:
        out = []
        for i in range(self.n, 2 * self.n):
            sign = "+" if self.r[i] % 4 == 0 else "-"
            body = "".join(
                "IXZY"[int(self.x[i, q]) + 2 * int(self.z[i, q])]
                for q in range(self.n)
            )
            out.append(sign + body)
        return out
