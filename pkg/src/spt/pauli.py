"""Bit-packed Pauli strings and sums.

A string on ``n`` qubits is stored as two integer bitsets, ``x`` and ``z``.
Bit ``q`` of each mask refers to qubit ``q`` (qubit 1 in 1-based labels is
bit 0). The letter on a qubit is read off the pair ``(x_q, z_q)``::

    (0, 0) -> I    (1, 0) -> X    (1, 1) -> Y    (0, 1) -> Z

``coeff`` multiplies the plain tensor product of these letters, so the
string ``"Y"`` with coefficient 1 is exactly ``[[0, -1j], [1j, 0]]``.
Internally ``Y = i X Z``; the i-power is applied inside :func:`multiply` and
:meth:`PauliString.basis_action`.

Computational basis states are integers whose bit ``q`` is the value of
qubit ``q``. Text bitstrings are written with qubit 1 leftmost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

PRUNE_TOL = 1e-12

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_I_POWERS = (1, 1j, -1, -1j)


class DimensionError(ValueError):
    """Raised when operands live on registers of different sizes."""


def popcount(v: int) -> int:
    return int(v).bit_count()


def bits_to_str(b: int, n: int) -> str:
    """Render basis state ``b`` with qubit 1 leftmost."""
    return "".join("1" if (b >> q) & 1 else "0" for q in range(n))


def str_to_bits(s: str) -> int:
    out = 0
    for q, ch in enumerate(s):
        if ch == "1":
            out |= 1 << q
        elif ch != "0":
            raise ValueError(f"bad bit character {ch!r} in {s!r}")
    return out


def mask_to_qubits(mask: int) -> list[int]:
    out = []
    q = 0
    while mask:
        if mask & 1:
            out.append(q)
        mask >>= 1
        q += 1
    return out


def qubits_to_mask(qubits: Iterable[int]) -> int:
    m = 0
    for q in qubits:
        m |= 1 << q
    return m


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x: int = 0
    z: int = 0
    coeff: complex = 1.0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise DimensionError("n_qubits must be positive")
        if (self.x | self.z) >> self.n_qubits:
            raise DimensionError("mask has bits beyond n_qubits")

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliString":
        """Build from a letter string such as ``"XIZY"`` (qubit 1 first)."""
        x = z = 0
        for q, ch in enumerate(label.upper()):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"unknown Pauli letter {ch!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z, complex(coeff))

    @classmethod
    def from_letters(cls, n_qubits: int, letters: Mapping[int, str], coeff: complex = 1.0) -> "PauliString":
        """Sparse constructor: ``{qubit: letter}``."""
        x = z = 0
        for q, ch in letters.items():
            bx, bz = _LETTER_BITS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z, complex(coeff))

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliString":
        return cls(n_qubits, 0, 0, complex(coeff))

    @property
    def key(self) -> tuple[int, int]:
        return (self.x, self.z)

    @property
    def label(self) -> str:
        x, z = self.x, self.z
        return "".join("IXZY"[((x >> q) & 1) | (((z >> q) & 1) << 1)] for q in range(self.n_qubits))

    def letter(self, q: int) -> str:
        return _BITS_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]

    @property
    def support(self) -> int:
        """Mask of non-identity qubits."""
        return self.x | self.z

    @property
    def n_y(self) -> int:
        return popcount(self.x & self.z)

    def unit(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x, self.z, 1.0)

    def scaled(self, c: complex) -> "PauliString":
        return PauliString(self.n_qubits, self.x, self.z, self.coeff * c)

    def __mul__(self, other):
        if isinstance(other, PauliString):
            return multiply(self, other)
        if isinstance(other, PauliSum):
            return PauliSum.from_strings([self], self.n_qubits) * other
        return self.scaled(complex(other))

    def __rmul__(self, other):
        return self.scaled(complex(other))

    def basis_action(self, b: int) -> tuple[int, complex]:
        """Return ``(b_out, amp)`` with ``<b_out|P|b> = amp``."""
        if b >> self.n_qubits:
            raise DimensionError("basis state has more bits than the register")
        amp = self.coeff * _I_POWERS[popcount(self.x & self.z) & 3]
        if popcount(self.z & b) & 1:
            amp = -amp
        return b ^ self.x, amp

    def basis_amplitudes(self, cols: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`basis_action` amplitudes for an array of basis states."""
        phase = self.coeff * _I_POWERS[popcount(self.x & self.z) & 3]
        cols = np.asarray(cols, dtype=np.uint64)
        sign = 1 - 2 * (np.bitwise_count(cols & np.uint64(self.z)) & 1).astype(np.int8)
        return phase * sign

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        cols = np.arange(dim, dtype=np.uint64)
        mat = np.zeros((dim, dim), dtype=complex)
        mat[(cols ^ np.uint64(self.x)).astype(np.int64), cols.astype(np.int64)] = self.basis_amplitudes(cols)
        return mat

    def expectation(self, psi: np.ndarray) -> complex:
        psi = np.asarray(psi)
        cols = np.arange(psi.shape[0], dtype=np.uint64)
        rows = (cols ^ np.uint64(self.x)).astype(np.int64)
        return complex(np.vdot(psi[rows], self.basis_amplitudes(cols) * psi))

    def __str__(self) -> str:
        return f"({self.coeff:.6g}) {self.label}"


def _check_sizes(p: PauliString, q: PauliString) -> None:
    if p.n_qubits != q.n_qubits:
        raise DimensionError(f"register sizes differ: {p.n_qubits} vs {q.n_qubits}")


def product_phase(x1: int, z1: int, x2: int, z2: int) -> complex:
    """Phase of ``sigma(x1, z1) sigma(x2, z2)`` relative to ``sigma(x1^x2, z1^z2)``."""
    k = (x1 & z1).bit_count() + (x2 & z2).bit_count() - ((x1 ^ x2) & (z1 ^ z2)).bit_count() \
        + 2 * (z1 & x2).bit_count()
    return _I_POWERS[k & 3]


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p @ q`` with the exact phase."""
    _check_sizes(p, q)
    x, z = p.x ^ q.x, p.z ^ q.z
    # sigma = i^{xz} X^x Z^z; moving Z^{z_p} past X^{x_q} costs (-1)^{|z_p & x_q|}
    k = popcount(p.x & p.z) + popcount(q.x & q.z) - popcount(x & z) + 2 * popcount(p.z & q.x)
    return PauliString(p.n_qubits, x, z, p.coeff * q.coeff * _I_POWERS[k & 3])


def qubitwise_commutes(p: PauliString, q: PauliString) -> bool:
    _check_sizes(p, q)
    return ((p.x ^ q.x) | (p.z ^ q.z)) & p.support & q.support == 0


def commutes(p: PauliString, q: PauliString) -> bool:
    _check_sizes(p, q)
    return (popcount(p.x & q.z) + popcount(p.z & q.x)) % 2 == 0


class PauliSum:
    """Linear combination of Pauli strings keyed by ``(x, z)``."""

    __slots__ = ("n_qubits", "_terms", "tol")

    def __init__(self, n_qubits: int, terms: Mapping[tuple[int, int], complex] | None = None, tol: float = PRUNE_TOL):
        if n_qubits < 1:
            raise DimensionError("n_qubits must be positive")
        self.n_qubits = n_qubits
        self.tol = tol
        self._terms = {k: complex(v) for k, v in (terms or {}).items() if abs(v) >= tol}

    @classmethod
    def from_strings(cls, strings: Iterable[PauliString], n_qubits: int | None = None) -> "PauliSum":
        acc: dict[tuple[int, int], complex] = {}
        n = n_qubits
        for s in strings:
            if n is None:
                n = s.n_qubits
            elif s.n_qubits != n:
                raise DimensionError("mixed register sizes")
            acc[s.key] = acc.get(s.key, 0j) + s.coeff
        if n is None:
            raise DimensionError("cannot infer register size of an empty sum")
        return cls(n, acc)

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @property
    def terms(self) -> Mapping[tuple[int, int], complex]:
        return dict(self._terms)

    def strings(self) -> list[PauliString]:
        return [PauliString(self.n_qubits, x, z, c) for (x, z), c in self._terms.items()]

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self.strings())

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, p: PauliString | str) -> complex:
        if isinstance(p, str):
            p = PauliString.from_label(p)
        return self._terms.get(p.key, 0j)

    def _other(self, other) -> "PauliSum":
        if isinstance(other, PauliString):
            other = PauliSum.from_strings([other])
        if not isinstance(other, PauliSum):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"register sizes differ: {self.n_qubits} vs {other.n_qubits}")
        return other

    def __add__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for k, v in other._terms.items():
            acc[k] = acc.get(k, 0j) + v
        return PauliSum(self.n_qubits, acc, self.tol)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        other = self._other(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            c = complex(other)
            return PauliSum(self.n_qubits, {k: v * c for k, v in self._terms.items()}, self.tol)
        other = self._other(other)
        if other is NotImplemented:
            return other
        acc: dict[tuple[int, int], complex] = {}
        for p in self.strings():
            for q in other.strings():
                r = multiply(p, q)
                acc[r.key] = acc.get(r.key, 0j) + r.coeff
        return PauliSum(self.n_qubits, acc, self.tol)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: v.conjugate() for k, v in self._terms.items()}, self.tol)

    def is_close(self, other: "PauliSum", tol: float = 1e-10) -> bool:
        other = self._other(other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= tol for k in keys)

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_qubits, frozenset(self._terms.items())))

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        for p in self.strings():
            mat += p.to_matrix()
        return mat

    def expectation(self, psi: np.ndarray) -> complex:
        return sum((p.expectation(psi) for p in self.strings()), 0j)

    def to_json(self) -> dict:
        terms = sorted(self.strings(), key=lambda p: p.label)
        return {
            "n_qubits": self.n_qubits,
            "terms": [{"string": p.label, "re": p.coeff.real, "im": p.coeff.imag} for p in terms],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PauliSum":
        n = int(data["n_qubits"])
        strings = []
        for t in data.get("terms", []):
            if len(t["string"]) != n:
                raise DimensionError(f"string {t['string']!r} does not have {n} letters")
            strings.append(PauliString.from_label(t["string"], complex(t.get("re", 0.0), t.get("im", 0.0))))
        return cls.from_strings(strings, n)

    def __repr__(self) -> str:
        inner = " + ".join(f"({p.coeff:.4g}){p.label}" for p in sorted(self.strings(), key=lambda p: p.label))
        return f"PauliSum({self.n_qubits}: {inner or '0'})"
