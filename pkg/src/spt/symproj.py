"""Projection of Pauli strings onto N- and Sz-conserving blocks.

A string that flips the stored bits ``x`` maps basis state ``b`` to
``b ^ x``. Keeping only the matrix elements whose row and column lie in the
same symmetry sector is ``sum_s P_s A P_s``. Because both symmetries are
diagonal, the kept elements are decided by the occupations of the modes the
string toggles, and those occupations are read from a small set of stored
bits. Everything outside that *support* is a common tensor factor (the tail)
and never has to be enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from spt.encode import EncodingSpec, sector_label_functions
from spt.pauli import (
    DimensionError,
    PRUNE_TOL,
    PauliString,
    PauliSum,
    bits_to_str,
    mask_to_qubits,
    popcount,
    qubits_to_mask,
    str_to_bits,
)

SYMMETRY_NAMES = ("N", "Sz")


class UnsupportedSymmetryError(ValueError):
    """Requested symmetry is not diagonal in the computational basis."""


@dataclass(frozen=True)
class DiagonalSymmetry:
    """A conserved quantity that is diagonal in the stored computational basis."""

    name: str
    encoding: EncodingSpec

    def __post_init__(self):
        canon = {"n": "N", "sz": "Sz"}.get(self.name.lower())
        if canon is None:
            raise UnsupportedSymmetryError(
                f"symmetry {self.name!r} is not diagonal in the computational basis; only N and Sz are supported"
            )
        object.__setattr__(self, "name", canon)

    @property
    def sector(self) -> Callable[[int], int]:
        n_fn, sz_fn = sector_label_functions(self.encoding)
        return n_fn if self.name == "N" else sz_fn

    def sector_array(self, bits: np.ndarray) -> np.ndarray:
        occ = self.encoding.decode_array(bits)
        if self.name == "N":
            return np.bitwise_count(occ).astype(np.int64)
        a = np.bitwise_count(occ & np.uint64(self.encoding.alpha_positions)).astype(np.int64)
        b = np.bitwise_count(occ & np.uint64(self.encoding.beta_positions)).astype(np.int64)
        return a - b

    def dependencies(self, x_mask: int) -> int:
        """Stored bits that decide whether flipping ``x_mask`` conserves this symmetry."""
        return self.encoding.occupation_dependencies(self.encoding.occupation_flips(x_mask))


def parse_symmetries(text: str | Sequence[str] | None, encoding: EncodingSpec) -> tuple[DiagonalSymmetry, ...]:
    """``"n"``, ``"n,sz"``, ``"n+sz"``, ``"none"`` or a list of names."""
    if text is None:
        return ()
    if isinstance(text, str):
        parts = [t for t in text.replace("+", ",").split(",") if t.strip()]
    else:
        parts = list(text)
    parts = [p.strip() for p in parts]
    if parts in ([], ["none"], ["∅"]):
        return ()
    return tuple(DiagonalSymmetry(p, encoding) for p in parts)


@dataclass(frozen=True)
class SupportDecomposition:
    support: tuple[int, ...]
    z_tail: tuple[int, ...]
    local: PauliString | None


def decompose_support(p: PauliString) -> SupportDecomposition:
    """Split ``p`` into its bit-flipping support and a diagonal Z tail."""
    support = tuple(mask_to_qubits(p.x))
    tail = tuple(mask_to_qubits(p.z & ~p.x))
    local = None
    if support:
        local = PauliString.from_letters(len(support), {i: p.letter(q) for i, q in enumerate(support)}, p.coeff)
    return SupportDecomposition(support, tail, local)


def _compress(mask: int, support: Sequence[int]) -> int:
    return sum(1 << i for i, q in enumerate(support) if (mask >> q) & 1)


def _expansion(support: Sequence[int]) -> np.ndarray:
    """Full-register bit patterns for every local state on ``support``."""
    full = np.zeros(1 << len(support), dtype=np.uint64)
    local = np.arange(1 << len(support), dtype=np.uint64)
    for i, q in enumerate(support):
        full |= ((local >> np.uint64(i)) & np.uint64(1)) << np.uint64(q)
    return full


class ProjectedOperator:
    """Sparse matrix over local bitstrings on ``support`` times a fixed tail.

    ``rows``, ``cols`` are local basis states (bit ``i`` is ``support[i]``),
    ``values`` the amplitudes. ``tail`` is a unit-coefficient Pauli string on
    the full register acting only outside ``support``.
    """

    __slots__ = ("n_qubits", "support", "tail", "rows", "cols", "values")

    def __init__(self, n_qubits: int, support: Sequence[int], tail: PauliString | None,
                 rows, cols, values):
        self.n_qubits = n_qubits
        self.support = tuple(int(q) for q in support)
        self.tail = tail if tail is not None else PauliString.identity(n_qubits)
        if self.tail.support & qubits_to_mask(self.support):
            raise DimensionError("tail overlaps the support")
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=complex)
        keep = np.abs(values) >= PRUNE_TOL
        self.rows, self.cols, self.values = rows[keep], cols[keep], values[keep]

    @property
    def z_tail(self) -> tuple[int, ...]:
        return tuple(q for q in mask_to_qubits(self.tail.z & ~self.tail.x))

    @property
    def entries(self) -> dict[tuple[str, str], complex]:
        s = len(self.support)
        return {
            (bits_to_str(int(r), s), bits_to_str(int(c), s)): complex(v)
            for r, c, v in zip(self.rows, self.cols, self.values)
        }

    def __len__(self) -> int:
        return len(self.values)

    def is_zero(self) -> bool:
        return len(self.values) == 0

    def local_matrix(self) -> np.ndarray:
        dim = 1 << len(self.support)
        mat = np.zeros((dim, dim), dtype=complex)
        np.add.at(mat, (self.rows, self.cols), self.values)
        return mat

    def embed(self) -> np.ndarray:
        """Dense matrix on the whole register (small registers only)."""
        n = self.n_qubits
        outside = [q for q in range(n) if q not in self.support]
        exp_in = _expansion(self.support).astype(np.int64)
        exp_out = _expansion(outside).astype(np.int64)
        mat = np.zeros((1 << n, 1 << n), dtype=complex)
        for o in exp_out:
            o2, amp = self.tail.basis_action(int(o))
            np.add.at(mat, (exp_in[self.rows] | o2, exp_in[self.cols] | int(o)), self.values * amp)
        return mat

    def to_json(self) -> dict:
        out = {
            "support": list(self.support),
            "z_tail": list(self.z_tail),
            "entries": [
                {"row": r, "col": c, "re": v.real, "im": v.imag} for (r, c), v in sorted(self.entries.items())
            ],
        }
        if self.tail.x:
            out["tail"] = self.tail.label
        return out

    @classmethod
    def from_json(cls, data, n_qubits: int) -> "ProjectedOperator":
        if "tail" in data:
            tail = PauliString.from_label(data["tail"])
        else:
            tail = PauliString(n_qubits, 0, qubits_to_mask(data.get("z_tail", [])))
        ents = data.get("entries", [])
        return cls(
            n_qubits,
            data["support"],
            tail,
            [str_to_bits(e["row"]) for e in ents],
            [str_to_bits(e["col"]) for e in ents],
            [complex(e["re"], e["im"]) for e in ents],
        )


def _dependencies(x_mask: int, syms: Sequence[DiagonalSymmetry]) -> int:
    dep = 0
    for s in syms:
        dep |= s.dependencies(x_mask)
    return dep


def local_register(strings: Iterable[PauliString], syms: Sequence[DiagonalSymmetry]) -> int:
    """Smallest qubit mask outside of which all ``strings`` share one fixed letter
    and on which every sector decision can be made."""
    strings = list(strings)
    if not strings:
        return 0
    x0, z0 = strings[0].x, strings[0].z
    vary = 0
    dep = 0
    for p in strings:
        vary |= (p.x ^ x0) | (p.z ^ z0)
        dep |= _dependencies(p.x, syms)
    return vary | dep


def _check_syms(syms: Sequence[DiagonalSymmetry]) -> None:
    for s in syms:
        if not isinstance(s, DiagonalSymmetry):
            raise UnsupportedSymmetryError(f"{s!r} is not a diagonal symmetry")


def _sector_values(syms: Sequence[DiagonalSymmetry], occ: np.ndarray) -> list[np.ndarray]:
    out = []
    for s in syms:
        if s.name == "N":
            out.append(np.bitwise_count(occ).astype(np.int64))
        else:
            a = np.bitwise_count(occ & np.uint64(s.encoding.alpha_positions)).astype(np.int64)
            b = np.bitwise_count(occ & np.uint64(s.encoding.beta_positions)).astype(np.int64)
            out.append(a - b)
    return out


class _SectorTable:
    """Occupations of every local state on a support, decoded once.

    Decoding is linear, so the occupations after flipping ``x`` are the
    stored ones XOR ``decode(x)``.
    """

    def __init__(self, support: Sequence[int], syms: Sequence[DiagonalSymmetry]):
        self.syms = tuple(syms)
        self.full_cols = _expansion(support)
        self.occ = syms[0].encoding.decode_array(self.full_cols) if syms else None
        self.labels = _sector_values(self.syms, self.occ) if syms else []

    def keep(self, x_mask: int) -> np.ndarray:
        keep = np.ones(self.full_cols.shape[0], dtype=bool)
        if not self.syms:
            return keep
        flips = np.uint64(self.syms[0].encoding.occupation_flips(x_mask))
        for lab, new in zip(self.labels, _sector_values(self.syms, self.occ ^ flips)):
            keep &= lab == new
        return keep


def _project_local(p: PauliString, support: Sequence[int], table: _SectorTable
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    keep = table.keep(p.x)
    xl = _compress(p.x, support)
    zl = _compress(p.z, support)
    cols = np.nonzero(keep)[0].astype(np.int64)
    phase = p.coeff * (1, 1j, -1, -1j)[popcount(xl & zl) & 3]
    sign = 1 - 2 * (np.bitwise_count(cols.astype(np.uint64) & np.uint64(zl)) & 1).astype(np.int64)
    return cols ^ xl, cols, phase * sign


def _tail_of(p: PauliString, support_mask: int) -> PauliString:
    keep = ~support_mask
    return PauliString(p.n_qubits, p.x & keep, p.z & keep, 1.0)


def project(p: PauliString, syms: Sequence[DiagonalSymmetry], support: Sequence[int] | None = None) -> ProjectedOperator:
    """Symmetry-conserving part of ``p`` as a local sparse operator.

    By default the support is every qubit ``p`` acts on plus the bits needed to
    decide sector membership, so diagonal strings are reproduced in full.
    """
    _check_syms(syms)
    if support is None:
        mask = p.support | _dependencies(p.x, syms)
    else:
        mask = qubits_to_mask(support)
    sup = mask_to_qubits(mask)
    rows, cols, vals = _project_local(p, sup, _SectorTable(sup, syms))
    return ProjectedOperator(p.n_qubits, sup, _tail_of(p, mask), rows, cols, vals)


def project_strings(strings: Sequence[PauliString], syms: Sequence[DiagonalSymmetry],
                    support_mask: int | None = None) -> list[ProjectedOperator]:
    """Project several strings onto one shared support."""
    _check_syms(syms)
    if support_mask is None:
        support_mask = local_register(strings, syms)
    sup = mask_to_qubits(support_mask)
    table = _SectorTable(sup, syms)
    out = []
    tail0 = None
    for p in strings:
        tail = _tail_of(p, support_mask)
        if tail0 is None:
            tail0 = tail
        elif tail.key != tail0.key:
            raise DimensionError("strings differ outside the shared support")
        rows, cols, vals = _project_local(p, sup, table)
        out.append(ProjectedOperator(p.n_qubits, sup, tail, rows, cols, vals))
    return out


def project_sum(s: PauliSum, syms: Sequence[DiagonalSymmetry], support: Sequence[int] | None = None) -> ProjectedOperator:
    """Linear combination of termwise projections over the union support."""
    strings = s.strings()
    if not strings:
        return ProjectedOperator(s.n_qubits, (), None, [], [], [])
    mask = local_register(strings, syms) if support is None else qubits_to_mask(support)
    parts = project_strings(strings, syms, mask)
    acc: dict[tuple[int, int], complex] = {}
    for part in parts:
        for r, c, v in zip(part.rows.tolist(), part.cols.tolist(), part.values.tolist()):
            acc[(r, c)] = acc.get((r, c), 0j) + v
    keys = sorted(acc)
    return ProjectedOperator(
        s.n_qubits,
        parts[0].support,
        parts[0].tail,
        [k[0] for k in keys],
        [k[1] for k in keys],
        [acc[k] for k in keys],
    )
