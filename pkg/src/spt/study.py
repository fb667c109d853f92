"""Whole-RDM measurement instances and the terms-versus-circuits sweep.

An instance is every k-RDM element on ``r`` qubits under one encoding and
symmetry set, turned into the naive Pauli strings (everything the encoded
elements contain) and the reduced strings chosen by the projection
pipeline. Both sets are then grouped by qubit-wise commutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from spt.encode import EncodingSpec
from spt.fermion import ZERO_CLASS, classify, enumerate_rdm, hermitian_components, rdm_element_operator
from spt.group import ScalingFit, group_strings, scaling_fit
from spt.pauli import PauliString
from spt.reduce import naive_strings, reduce_measurements
from spt.symproj import parse_symmetries


def _canon_syms(symmetries: str | Sequence[str] | None) -> tuple[str, ...]:
    enc = EncodingSpec("jw", 2)
    return tuple(s.name for s in parse_symmetries(symmetries, enc))


def rdm_targets(k: int, n_modes: int, symmetries: Sequence[str] = ()) -> dict:
    """Hermitian components of every k-RDM element keyed by ``(spec, part)``.

    Elements with a repeated spin orbital vanish identically and are skipped.
    When S_z is among the symmetries, S_z-changing elements are known to be
    zero and are skipped as well.
    """
    if n_modes % 2:
        raise ValueError("number of modes must be even (two spins per orbital)")
    skip_sz = "Sz" in symmetries
    out = {}
    for spec in enumerate_rdm(k, n_modes // 2):
        if spec.excluded:
            continue
        if skip_sz and classify(spec)[1] == ZERO_CLASS:
            continue
        real, imag = hermitian_components(rdm_element_operator(spec))
        out[(spec, "re")] = real
        if not imag.is_zero():
            out[(spec, "im")] = imag
    return out


@dataclass(frozen=True)
class Instance:
    k: int
    r: int
    mapping: str
    symmetries: tuple[str, ...]
    naive: tuple[PauliString, ...]
    reduced: tuple[PauliString, ...]
    naive_circuits: int
    reduced_circuits: int

    @property
    def ratio(self) -> float:
        """Naive terms per reduced circuit."""
        return len(self.naive) / self.reduced_circuits if self.reduced_circuits else float("inf")


@lru_cache(maxsize=None)
def _instance(k: int, r: int, mapping: str, symmetries: tuple[str, ...], layout: str) -> Instance:
    enc = EncodingSpec.make(mapping, r, layout)
    syms = parse_symmetries(list(symmetries), enc)
    targets = rdm_targets(k, r, symmetries)
    # canonical order, so equal string sets always group identically
    naive = tuple(sorted(naive_strings(targets.values(), enc), key=_order))
    reduced = tuple(sorted(reduce_measurements(targets, enc, syms).selected, key=_order))
    return Instance(k, r, enc.short_name, symmetries, naive, reduced, _circuits(naive), _circuits(reduced))


def _order(p: PauliString) -> tuple[int, int]:
    return p.key


_circuit_cache: dict[tuple, int] = {}


def _circuits(strings: tuple[PauliString, ...]) -> int:
    key = tuple(p.key for p in strings)
    if key not in _circuit_cache:
        _circuit_cache[key] = group_strings(strings).circuit_count
    return _circuit_cache[key]


def build_instance(r: int, mapping: str = "jw", symmetries: str | Sequence[str] | None = ("N", "Sz"),
                   k: int = 2, layout: str = "blocked") -> Instance:
    """Cached naive/reduced strings and circuit counts for one configuration."""
    enc = EncodingSpec.make(mapping, r, layout)
    return _instance(k, r, enc.kind, _canon_syms(symmetries), layout)


@dataclass(frozen=True)
class SweepRow:
    mapping: str
    symmetries: str
    r: int
    naive_terms: int
    naive_circuits: int
    reduced_terms: int
    reduced_circuits: int
    ratio: float
    fitted_n: float | None = None


def symmetry_label(symmetries: Sequence[str]) -> str:
    return "+".join(s.lower() for s in symmetries) or "none"


def sweep(r_values: Sequence[int], mappings: Sequence[str], symmetry_sets: Sequence[Sequence[str]],
          k: int = 2, layout: str = "blocked", fit: bool = True) -> list[SweepRow]:
    """One row per (mapping, symmetry set, r); ``fitted_n`` is the reduced-circuit exponent."""
    rows = []
    for mapping in mappings:
        for syms in symmetry_sets:
            insts = [build_instance(r, mapping, syms, k, layout) for r in r_values]
            n = None
            if fit and len(insts) >= 3:
                n = scaling_fit([(i.r, i.reduced_circuits) for i in insts]).exponent
            for i in insts:
                rows.append(SweepRow(
                    i.mapping, symmetry_label(i.symmetries), i.r, len(i.naive), i.naive_circuits,
                    len(i.reduced), i.reduced_circuits, i.ratio, n,
                ))
    return rows


def circuit_exponent(r_values: Sequence[int], mapping: str, symmetries, k: int = 2,
                     which: str = "reduced") -> ScalingFit:
    insts = [build_instance(r, mapping, symmetries, k) for r in r_values]
    attr = "reduced_circuits" if which == "reduced" else "naive_circuits"
    return scaling_fit([(i.r, getattr(i, attr)) for i in insts])
