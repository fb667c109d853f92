"""Ladder-operator products, RDM element operators and their classification.

Spin orbitals map to mode indices in blocked order: every alpha spatial
orbital (ascending) and then every beta one. No normal ordering is applied;
operators are kept exactly as written so that their sign conventions survive
into the qubit encodings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

ALPHA, BETA = "a", "b"
_SPIN_GLYPH = {ALPHA: "α", BETA: "β"}
_BAR_GLYPH = {ALPHA: "ᾱ", BETA: "β̄"}
ZERO_CLASS = "zero-class"


@dataclass(frozen=True, order=True)
class SpinOrbital:
    spatial: int
    spin: str

    def __post_init__(self):
        if self.spin not in (ALPHA, BETA):
            raise ValueError(f"spin must be {ALPHA!r} or {BETA!r}, got {self.spin!r}")
        if self.spatial < 0:
            raise ValueError("spatial index must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "SpinOrbital":
        """Parse ``"1α"``, ``"1a"``, ``"2β"`` or ``"2b"`` (1-based spatial index)."""
        text = text.strip()
        spin = {"α": ALPHA, "a": ALPHA, "β": BETA, "b": BETA}.get(text[-1])
        if spin is None:
            raise ValueError(f"cannot parse spin orbital {text!r}")
        return cls(int(text[:-1]) - 1, spin)

    def mode(self, n_spatial: int) -> int:
        if self.spatial >= n_spatial:
            raise IndexError(f"spatial orbital {self.spatial} out of range for {n_spatial}")
        return self.spatial if self.spin == ALPHA else n_spatial + self.spatial

    @staticmethod
    def from_mode(mode: int, n_spatial: int) -> "SpinOrbital":
        if mode < n_spatial:
            return SpinOrbital(mode, ALPHA)
        return SpinOrbital(mode - n_spatial, BETA)

    def __str__(self) -> str:
        return f"{self.spatial + 1}{_SPIN_GLYPH[self.spin]}"


@dataclass(frozen=True)
class LadderTerm:
    factors: tuple[tuple[int, bool], ...]
    coeff: complex = 1.0

    def adjoint(self) -> "LadderTerm":
        return LadderTerm(tuple((m, not d) for m, d in reversed(self.factors)), complex(self.coeff).conjugate())

    def __str__(self) -> str:
        ops = " ".join(f"a{'†' if d else ''}_{m}" for m, d in self.factors)
        return f"({self.coeff:.4g}) {ops or '1'}"


class FermionOperator:
    """Sum of ladder-operator products on ``n_modes`` modes."""

    def __init__(self, n_modes: int, terms: Iterable[LadderTerm] = ()):
        if n_modes < 1:
            raise ValueError("n_modes must be positive")
        merged: dict[tuple[tuple[int, bool], ...], complex] = {}
        for t in terms:
            for m, _ in t.factors:
                if not 0 <= m < n_modes:
                    raise IndexError(f"mode {m} out of range for {n_modes} modes")
            merged[t.factors] = merged.get(t.factors, 0j) + complex(t.coeff)
        self.n_modes = n_modes
        self.terms: tuple[LadderTerm, ...] = tuple(LadderTerm(f, c) for f, c in merged.items() if c != 0)

    @classmethod
    def product(cls, n_modes: int, factors: Sequence[tuple[int, bool]], coeff: complex = 1.0) -> "FermionOperator":
        return cls(n_modes, [LadderTerm(tuple((int(m), bool(d)) for m, d in factors), complex(coeff))])

    @classmethod
    def zero(cls, n_modes: int) -> "FermionOperator":
        return cls(n_modes)

    def is_zero(self) -> bool:
        return not self.terms

    def adjoint(self) -> "FermionOperator":
        return FermionOperator(self.n_modes, [t.adjoint() for t in self.terms])

    def modes(self) -> set[int]:
        return {m for t in self.terms for m, _ in t.factors}

    def _check(self, other: "FermionOperator") -> None:
        if other.n_modes != self.n_modes:
            raise ValueError(f"mode counts differ: {self.n_modes} vs {other.n_modes}")

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        self._check(other)
        return FermionOperator(self.n_modes, self.terms + other.terms)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + other * -1

    def __mul__(self, c) -> "FermionOperator":
        c = complex(c)
        return FermionOperator(self.n_modes, [LadderTerm(t.factors, t.coeff * c) for t in self.terms])

    __rmul__ = __mul__

    def _as_dict(self) -> dict:
        return {t.factors: t.coeff for t in self.terms}

    def __eq__(self, other) -> bool:
        if not isinstance(other, FermionOperator):
            return NotImplemented
        return self.n_modes == other.n_modes and self._as_dict() == other._as_dict()

    def __hash__(self):
        return hash((self.n_modes, frozenset(self._as_dict().items())))

    def is_close(self, other: "FermionOperator", tol: float = 1e-12) -> bool:
        a, b = self._as_dict(), other._as_dict()
        return self.n_modes == other.n_modes and all(abs(a.get(k, 0) - b.get(k, 0)) <= tol for k in set(a) | set(b))

    def to_json(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "terms": [
                {
                    "factors": [[m, "+" if d else "-"] for m, d in t.factors],
                    "re": complex(t.coeff).real,
                    "im": complex(t.coeff).imag,
                }
                for t in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FermionOperator":
        terms = []
        for t in data.get("terms", []):
            factors = []
            for m, kind in t["factors"]:
                if kind not in ("+", "-"):
                    raise ValueError(f"ladder kind must be '+' or '-', got {kind!r}")
                factors.append((int(m), kind == "+"))
            terms.append(LadderTerm(tuple(factors), complex(t.get("re", 0.0), t.get("im", 0.0))))
        return cls(int(data["n_modes"]), terms)

    def __repr__(self) -> str:
        return f"FermionOperator({self.n_modes}: {' + '.join(map(str, self.terms)) or '0'})"


@dataclass(frozen=True)
class RdmElementSpec:
    """Element ``D^{upper}_{lower}`` of the k-RDM.

    The operator is ``a†_{u1} ... a†_{uk} a_{lk} ... a_{l1}``, so for k=2 the
    upper pair ``(i, k)`` and lower pair ``(j, l)`` give ``a†_i a†_k a_l a_j``.
    """

    upper: tuple[SpinOrbital, ...]
    lower: tuple[SpinOrbital, ...]
    n_spatial: int
    k: int = field(init=False)

    def __post_init__(self):
        if len(self.upper) != len(self.lower):
            raise ValueError("upper and lower index tuples must have equal length")
        if not 1 <= len(self.upper) <= 3:
            raise ValueError("RDM order must be 1, 2 or 3")
        object.__setattr__(self, "k", len(self.upper))
        for so in self.upper + self.lower:
            so.mode(self.n_spatial)

    @classmethod
    def parse(cls, upper: Sequence[str], lower: Sequence[str], n_spatial: int) -> "RdmElementSpec":
        return cls(tuple(map(SpinOrbital.parse, upper)), tuple(map(SpinOrbital.parse, lower)), n_spatial)

    @property
    def n_modes(self) -> int:
        return 2 * self.n_spatial

    @property
    def excluded(self) -> bool:
        """True when a tuple repeats a spin orbital, making the element vanish."""
        return len(set(self.upper)) < self.k or len(set(self.lower)) < self.k

    @property
    def upper_modes(self) -> tuple[int, ...]:
        return tuple(so.mode(self.n_spatial) for so in self.upper)

    @property
    def lower_modes(self) -> tuple[int, ...]:
        return tuple(so.mode(self.n_spatial) for so in self.lower)

    @property
    def is_diagonal(self) -> bool:
        return self.upper == self.lower

    def __str__(self) -> str:
        return f"D[{','.join(map(str, self.upper))};{','.join(map(str, self.lower))}]"


def rdm_element_operator(spec: RdmElementSpec) -> FermionOperator:
    factors = [(m, True) for m in spec.upper_modes] + [(m, False) for m in reversed(spec.lower_modes)]
    return FermionOperator.product(spec.n_modes, factors)


def hermitian_components(op: FermionOperator) -> tuple[FermionOperator, FermionOperator]:
    """Split ``T`` into the Hermitian pair ``(T + T†, i(T - T†))``.

    A self-adjoint ``T`` is returned as ``(T, 0)``.
    """
    adj = op.adjoint()
    if adj == op:
        return op, FermionOperator.zero(op.n_modes)
    return op + adj, (op - adj) * 1j


def _spin_counts(spec: RdmElementSpec, spin: str) -> tuple[set, set]:
    up = {so for so in spec.upper if so.spin == spin}
    lo = {so for so in spec.lower if so.spin == spin}
    return up, lo


def classify(spec: RdmElementSpec, encoding_order=None) -> tuple[str, int | str]:
    """Table-style ``(spin_class, q_sites)`` of an element.

    Diagonal pairs (a spin orbital both created and annihilated) print as
    plain letters, excitation pairs with bars, alpha before beta. Spin flips
    of the same shape share a row; the label is written with alpha carrying
    more pairs (ties: fewer alpha excitations). Elements that change S_z get
    ``q_sites == "zero-class"`` and a label made of their letter counts.

    ``encoding_order`` is accepted for interface symmetry with the encoders;
    the number of sites does not depend on the qubit layout.
    """
    counts = {}
    zero = False
    for spin in (ALPHA, BETA):
        n_up = sum(so.spin == spin for so in spec.upper)
        n_lo = sum(so.spin == spin for so in spec.lower)
        if n_up != n_lo:
            zero = True
        up, lo = _spin_counts(spec, spin)
        diag = len(up & lo)
        counts[spin] = (diag, len(up) - diag, n_up + n_lo)
    if zero or spec.excluded:
        na, nb = counts[ALPHA][2], counts[BETA][2]
        if nb > na:
            na, nb = nb, na
        return "α" * na + "β" * nb, ZERO_CLASS

    da, ea, _ = counts[ALPHA]
    db, eb, _ = counts[BETA]
    if (db + eb, -eb) > (da + ea, -ea):
        da, ea, db, eb = db, eb, da, ea
    label = "α" * (2 * da) + _BAR_GLYPH[ALPHA] * (2 * ea) + "β" * (2 * db) + _BAR_GLYPH[BETA] * (2 * eb)
    q_sites = len(set(spec.upper) | set(spec.lower))
    return label, q_sites


def enumerate_rdm(k: int, n_spatial: int) -> list[RdmElementSpec]:
    """One spec per Hermitian-conjugate pair of the full k-RDM.

    Upper and lower tuples are ascending mode combinations; zero-class
    elements are included (see :func:`classify`).
    """
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    if n_spatial < 1:
        raise ValueError("n_spatial must be positive")
    orbitals = [SpinOrbital.from_mode(m, n_spatial) for m in range(2 * n_spatial)]
    tuples = list(combinations(orbitals, k))
    return [
        RdmElementSpec(tuples[i], tuples[j], n_spatial)
        for i in range(len(tuples))
        for j in range(i, len(tuples))
    ]
