"""Jordan-Wigner, parity and Bravyi-Kitaev encodings.

All three are linear over GF(2): the stored qubit bits are ``E @ occ`` for an
invertible binary matrix ``E`` acting on occupation numbers laid out in qubit
order. With ``D = E^{-1}`` a creation operator on position ``j`` becomes

    a†_j = 1/2 X^{E[:, j]} Z^{D_0 ^ ... ^ D_{j-1}} (I + Z^{D_j})

i.e. flip the stored bits that depend on ``occ_j``, pick up the sign of the
occupations below ``j`` and project onto ``occ_j = 0``. The annihilator has
``I - Z^{D_j}``. For ``E = I`` this is the usual Jordan-Wigner string with
Z on every lower qubit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from spt.fermion import ALPHA, BETA, FermionOperator
from spt.pauli import PauliString, PauliSum, multiply, popcount, product_phase

KINDS = ("jordan_wigner", "parity", "bravyi_kitaev")
_ALIASES = {
    "jw": "jordan_wigner",
    "jordan_wigner": "jordan_wigner",
    "jordan-wigner": "jordan_wigner",
    "parity": "parity",
    "bk": "bravyi_kitaev",
    "bravyi_kitaev": "bravyi_kitaev",
    "bravyi-kitaev": "bravyi_kitaev",
}


class EncodingError(ValueError):
    """Unknown encoding kind or inconsistent encoding parameters."""


def blocked_spins(n_modes: int) -> tuple[str, ...]:
    half = n_modes // 2
    return tuple(ALPHA if m < half else BETA for m in range(n_modes))


def interleaved_order(n_modes: int) -> tuple[int, ...]:
    """Qubit position of each blocked mode when spins are interleaved (α0 β0 α1 β1 ...)."""
    half = n_modes // 2
    return tuple(2 * m if m < half else 2 * (m - half) + 1 for m in range(n_modes))


@dataclass(frozen=True)
class EncodingSpec:
    kind: str
    n_modes: int
    mode_order: tuple[int, ...] | None = None
    mode_spins: tuple[str, ...] | None = None

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise EncodingError(f"unknown encoding kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.n_modes < 1:
            raise EncodingError("n_modes must be positive")
        order = tuple(range(self.n_modes)) if self.mode_order is None else tuple(int(q) for q in self.mode_order)
        if sorted(order) != list(range(self.n_modes)):
            raise EncodingError("mode_order must be a permutation of the modes")
        object.__setattr__(self, "mode_order", order)
        spins = blocked_spins(self.n_modes) if self.mode_spins is None else tuple(self.mode_spins)
        if len(spins) != self.n_modes or any(s not in (ALPHA, BETA) for s in spins):
            raise EncodingError("mode_spins must give 'a' or 'b' for every mode")
        object.__setattr__(self, "mode_spins", spins)

    @classmethod
    def make(cls, kind: str, n_modes: int, layout: str = "blocked", mode_spins=None) -> "EncodingSpec":
        if layout == "blocked":
            return cls(kind, n_modes, None, mode_spins)
        if layout == "interleaved":
            return cls(kind, n_modes, interleaved_order(n_modes), mode_spins)
        raise EncodingError(f"unknown mode layout {layout!r}")

    @property
    def n_qubits(self) -> int:
        return self.n_modes

    @property
    def short_name(self) -> str:
        return {"jordan_wigner": "jw", "parity": "parity", "bravyi_kitaev": "bk"}[self.kind]

    # -- GF(2) structure -------------------------------------------------

    @property
    def encoder_rows(self) -> tuple[int, ...]:
        return _encoder_rows(self.kind, self.n_modes)

    @property
    def decoder_rows(self) -> tuple[int, ...]:
        """Row ``j`` is the mask of stored bits whose parity is ``occ_j``."""
        return _decoder_rows(self.kind, self.n_modes)

    @property
    def alpha_positions(self) -> int:
        return sum(1 << self.mode_order[m] for m in range(self.n_modes) if self.mode_spins[m] == ALPHA)

    @property
    def beta_positions(self) -> int:
        return sum(1 << self.mode_order[m] for m in range(self.n_modes) if self.mode_spins[m] == BETA)

    def decode(self, bits: int) -> int:
        """Occupation bitstring (qubit positions) of stored computational state ``bits``."""
        if self.kind == "jordan_wigner":
            return bits
        occ = 0
        for j, row in enumerate(self.decoder_rows):
            if popcount(row & bits) & 1:
                occ |= 1 << j
        return occ

    def encode_occupations(self, occ: int) -> int:
        if self.kind == "jordan_wigner":
            return occ
        bits = 0
        for i, row in enumerate(self.encoder_rows):
            if popcount(row & occ) & 1:
                bits |= 1 << i
        return bits

    def decode_array(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint64)
        if self.kind == "jordan_wigner":
            return bits
        occ = np.zeros_like(bits)
        for j, row in enumerate(self.decoder_rows):
            occ |= (np.bitwise_count(bits & np.uint64(row)) & np.uint8(1)).astype(np.uint64) << np.uint64(j)
        return occ

    def occupation_dependencies(self, flips: int) -> int:
        """Stored bits needed to read the occupations of the positions in ``flips``."""
        dep = 0
        rows = self.decoder_rows
        for j in range(self.n_modes):
            if (flips >> j) & 1:
                dep |= rows[j]
        return dep

    def occupation_flips(self, x_mask: int) -> int:
        """Occupation positions toggled by flipping the stored bits in ``x_mask``."""
        return self.decode(x_mask)


@lru_cache(maxsize=None)
def _encoder_rows(kind: str, n: int) -> tuple[int, ...]:
    if kind == "jordan_wigner":
        return tuple(1 << i for i in range(n))
    if kind == "parity":
        return tuple((1 << (i + 1)) - 1 for i in range(n))
    # Fenwick tree: qubit i stores occupations (i - lowbit(i+1), i]
    rows = []
    for i in range(n):
        low = (i + 1) & -(i + 1)
        rows.append(sum(1 << j for j in range(i + 1 - low, i + 1)))
    return tuple(rows)


@lru_cache(maxsize=None)
def _decoder_rows(kind: str, n: int) -> tuple[int, ...]:
    rows = list(_encoder_rows(kind, n))
    inv = [1 << i for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if (rows[r] >> col) & 1)
        rows[col], rows[piv] = rows[piv], rows[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        for r in range(n):
            if r != col and (rows[r] >> col) & 1:
                rows[r] ^= rows[col]
                inv[r] ^= inv[col]
    return tuple(inv)


@lru_cache(maxsize=None)
def ladder(spec: EncodingSpec, mode: int, dagger: bool) -> PauliSum:
    """Encoded ``a†_mode`` (``dagger=True``) or ``a_mode``."""
    if not 0 <= mode < spec.n_modes:
        raise IndexError(f"mode {mode} out of range for {spec.n_modes} modes")
    n = spec.n_qubits
    j = spec.mode_order[mode]
    enc, dec = spec.encoder_rows, spec.decoder_rows
    flip = sum(1 << i for i in range(n) if (enc[i] >> j) & 1)
    sign = 0
    for i in range(j):
        sign ^= dec[i]
    base = multiply(PauliString(n, flip, 0, 0.5), PauliString(n, 0, sign))
    proj = multiply(base, PauliString(n, 0, dec[j]))
    if not dagger:
        proj = proj.scaled(-1)
    return PauliSum.from_strings([base, proj], n)


def _term_product(spec: EncodingSpec, factors) -> dict[tuple[int, int], complex]:
    acc: dict[tuple[int, int], complex] = {(0, 0): 1.0 + 0j}
    for mode, dagger in factors:
        nxt: dict[tuple[int, int], complex] = {}
        for (x2, z2), c2 in ladder(spec, mode, dagger).terms.items():
            for (x1, z1), c1 in acc.items():
                key = (x1 ^ x2, z1 ^ z2)
                nxt[key] = nxt.get(key, 0j) + c1 * c2 * product_phase(x1, z1, x2, z2)
        acc = {k: v for k, v in nxt.items() if abs(v) >= 1e-15}
    return acc


def encode(op: FermionOperator, spec: EncodingSpec) -> PauliSum:
    """Qubit form of ``op``; matrix-exact under the encoding's basis convention."""
    if op.n_modes > spec.n_modes:
        raise EncodingError(f"operator has {op.n_modes} modes but encoding has {spec.n_modes}")
    total: dict[tuple[int, int], complex] = {}
    for term in op.terms:
        for key, c in _cached_product(spec, term.factors).items():
            total[key] = total.get(key, 0j) + c * term.coeff
    return PauliSum(spec.n_qubits, total)


@lru_cache(maxsize=100_000)
def encode_cached(op: FermionOperator, spec: EncodingSpec) -> PauliSum:
    """Memoised :func:`encode`; the returned sum must not be mutated."""
    return encode(op, spec)


@lru_cache(maxsize=200_000)
def _cached_product(spec: EncodingSpec, factors) -> dict[tuple[int, int], complex]:
    return _term_product(spec, factors)


def term_strings(op: FermionOperator, spec: EncodingSpec) -> set[tuple[int, int]]:
    """Every Pauli string produced by some ladder product of ``op`` or its adjoint.

    Adjoints produce the same strings with conjugated coefficients, so only
    the products themselves are expanded. Cancellations between different
    products are ignored on purpose.
    """
    keys: set[tuple[int, int]] = set()
    for term in op.terms:
        keys.update(k for k, v in _cached_product(spec, term.factors).items() if abs(v) >= 1e-12)
    return keys


def sector_label_functions(spec: EncodingSpec) -> tuple[Callable[[int], int], Callable[[int], int]]:
    """Particle number and ``2 S_z`` of a stored computational bitstring."""
    amask, bmask = spec.alpha_positions, spec.beta_positions

    def n_of_bits(bits: int) -> int:
        return popcount(spec.decode(bits))

    def sz_of_bits(bits: int) -> int:
        occ = spec.decode(bits)
        return popcount(occ & amask) - popcount(occ & bmask)

    return n_of_bits, sz_of_bits
