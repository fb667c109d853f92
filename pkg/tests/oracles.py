"""Independent reference implementations used only by the tests.

Nothing here imports the package's algebra: Pauli matrices come from
explicit Kronecker products, fermionic operators from sign counting in the
occupation basis, and encodings from their textbook matrix definitions.
"""

from __future__ import annotations

from functools import reduce

import numpy as np
import scipy.sparse as sp

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_dense(label: str) -> np.ndarray:
    """``label[q]`` acts on qubit ``q``, which is bit ``q`` of the basis index."""
    return reduce(np.kron, [PAULI[ch] for ch in reversed(label)], np.ones((1, 1), dtype=complex))


def pauli_sparse(label: str) -> sp.csr_matrix:
    mats = [sp.csr_matrix(PAULI[ch]) for ch in reversed(label)]
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), mats, sp.csr_matrix(np.ones((1, 1))))


def encoder_matrix(kind: str, n: int) -> np.ndarray:
    """Binary matrix ``E`` with stored bits ``b = E occ (mod 2)``."""
    if kind in ("jw", "jordan_wigner"):
        return np.eye(n, dtype=np.int64)
    if kind == "parity":
        return np.tril(np.ones((n, n), dtype=np.int64))
    # Bravyi-Kitaev by the recursive block construction, cut to size
    beta = np.ones((1, 1), dtype=np.int64)
    while beta.shape[0] < n:
        m = beta.shape[0]
        a = np.zeros((m, m), dtype=np.int64)
        a[-1, :] = 1
        beta = np.block([[beta, np.zeros((m, m), dtype=np.int64)], [a, beta]])
    return beta[:n, :n]


def _bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.int64)


def _int(bits: np.ndarray) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))


def occupation_to_stored(kind: str, n: int) -> dict[int, int]:
    e = encoder_matrix(kind, n)
    return {occ: _int(e @ _bits(occ, n) % 2) for occ in range(1 << n)}


def ladder_fock(pos: int, n: int, dagger: bool) -> np.ndarray:
    """Creation/annihilation on occupation position ``pos`` in the occupation basis."""
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    for occ in range(dim):
        filled = (occ >> pos) & 1
        if filled == dagger:
            continue
        sign = (-1) ** bin(occ & ((1 << pos) - 1)).count("1")
        m[occ ^ (1 << pos), occ] = sign
    return m


def operator_dense(kind: str, n: int, factors, positions=None) -> np.ndarray:
    """Stored-basis matrix of a ladder product ``[(mode, dagger), ...]`` (leftmost factor last applied)."""
    positions = positions or list(range(n))
    op = np.eye(1 << n, dtype=complex)
    for mode, dagger in factors:
        op = op @ ladder_fock(positions[mode], n, dagger)
    perm = occupation_to_stored(kind, n)
    out = np.zeros_like(op)
    for o1, b1 in perm.items():
        for o2, b2 in perm.items():
            out[b1, b2] = op[o1, o2]
    return out


def sector_labels(kind: str, n: int, alpha_positions: int) -> dict[int, tuple[int, int]]:
    """``(N, 2Sz)`` of every stored basis state."""
    out = {}
    for occ, b in occupation_to_stored(kind, n).items():
        na = bin(occ & alpha_positions).count("1")
        nb = bin(occ & ~alpha_positions & ((1 << n) - 1)).count("1")
        out[b] = (na + nb, na - nb)
    return out


def projectors(labels: dict[int, tuple], which: tuple[int, ...]) -> list[sp.csr_matrix]:
    """Explicit diagonal projectors onto every joint sector of the chosen label components."""
    dim = len(labels)
    sectors: dict[tuple, list[int]] = {}
    for b, lab in labels.items():
        sectors.setdefault(tuple(lab[i] for i in which), []).append(b)
    out = []
    for members in sectors.values():
        d = np.zeros(dim)
        d[members] = 1.0
        out.append(sp.diags(d, format="csr"))
    return out


def project_dense(a, projs) -> sp.csr_matrix:
    """``sum_s P_s A P_s``."""
    a = sp.csr_matrix(a)
    return reduce(lambda x, y: x + y, [p @ a @ p for p in projs])


def fermion_dense(op, kind: str, positions=None) -> np.ndarray:
    """Stored-basis matrix of a ``FermionOperator`` built term by term in the occupation basis."""
    n = op.n_modes
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for t in op.terms:
        out += t.coeff * operator_dense(kind, n, t.factors, positions)
    return out
