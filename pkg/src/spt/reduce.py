"""Reduced measurement bases from symmetry-projected Pauli strings.

For each target operator ``M = sum_i a_i A_i`` the projected candidates
``A_i^c`` are flattened to vectors over the kept matrix elements, a greedy
scan picks linearly independent columns ``U``, and ``U x = m`` gives the
coefficients of the reduced measurement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from spt.encode import EncodingSpec, encode_cached, term_strings
from spt.fermion import (
    ZERO_CLASS,
    FermionOperator,
    classify,
    enumerate_rdm,
    hermitian_components,
    rdm_element_operator,
)
from spt.pauli import DimensionError, PauliString, PauliSum, mask_to_qubits
from spt.symproj import DiagonalSymmetry, ProjectedOperator, local_register, project_strings

log = logging.getLogger(__name__)

INDEPENDENCE_TOL = 1e-9
SOLVE_TOL = 1e-9


class TargetNotInSpanError(ValueError):
    """The projected target is not reproduced by the selected columns."""


def default_policy(p: PauliString) -> tuple:
    """Fewest Y letters first, then lexicographic label."""
    return (p.n_y, p.label)


# -- vectors -------------------------------------------------------------------


@dataclass
class OperatorVector:
    index: Mapping[tuple[int, int], int]
    values: np.ndarray


def vectorize(ops: Sequence[ProjectedOperator]) -> tuple[dict[tuple[int, int], int], list[OperatorVector]]:
    """Shared coordinate system over every ``(row, col)`` entry present."""
    if not ops:
        return {}, []
    sup, tail = ops[0].support, ops[0].tail.key
    index: dict[tuple[int, int], int] = {}
    for op in ops:
        if op.support != sup or op.tail.key != tail:
            raise DimensionError("projected operators do not share a support")
        for rc in zip(op.rows.tolist(), op.cols.tolist()):
            if rc not in index:
                index[rc] = len(index)
    out = []
    for op in ops:
        v = np.zeros(len(index), dtype=complex)
        for r, c, val in zip(op.rows.tolist(), op.cols.tolist(), op.values.tolist()):
            v[index[(r, c)]] += val
        out.append(OperatorVector(index, v))
    return index, out


# -- selection and solve -----------------------------------------------------------


class _Orthobasis:
    """Incremental Gram-Schmidt (applied twice) keeping ``U = Q R``."""

    def __init__(self, dim: int):
        self.dim = dim
        self.q: list[np.ndarray] = []
        self.r_cols: list[np.ndarray] = []

    def residual(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        coeffs = np.zeros(len(self.q), dtype=complex)
        w = v.astype(complex, copy=True)
        for _ in range(2):
            for i, qi in enumerate(self.q):
                c = np.vdot(qi, w)
                coeffs[i] += c
                w -= c * qi
        return w, coeffs

    def try_add(self, v: np.ndarray, tol: float) -> bool:
        norm = np.linalg.norm(v)
        if norm == 0.0:
            return False
        w, coeffs = self.residual(v)
        rn = np.linalg.norm(w)
        if rn <= tol * norm:
            return False
        self.q.append(w / rn)
        self.r_cols.append(np.append(coeffs, rn))
        return True

    def r_matrix(self) -> np.ndarray:
        k = len(self.q)
        r = np.zeros((k, k), dtype=complex)
        for j, col in enumerate(self.r_cols):
            r[: len(col), j] = col
        return r

    def solve(self, m: np.ndarray) -> tuple[np.ndarray, float]:
        k = len(self.q)
        if k == 0:
            return np.zeros(0, dtype=complex), float(np.linalg.norm(m))
        w, qtm = self.residual(m)
        return back_substitute(self.r_matrix(), qtm), float(np.linalg.norm(w))


def back_substitute(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    k = r.shape[0]
    x = np.zeros(k, dtype=complex)
    for i in range(k - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


def select_independent(candidates: Sequence[OperatorVector | np.ndarray], order: Sequence[int] | None = None,
                       tol: float = INDEPENDENCE_TOL) -> list[int]:
    """Greedy scan in ``order``; keep a column if its residual exceeds ``tol * |v|``."""
    vecs = [c.values if isinstance(c, OperatorVector) else np.asarray(c) for c in candidates]
    if not vecs:
        return []
    basis = _Orthobasis(len(vecs[0]))
    order = range(len(vecs)) if order is None else order
    return [i for i in order if basis.try_add(vecs[i], tol)]


def solve(u: np.ndarray, m: np.ndarray | OperatorVector, tol: float = SOLVE_TOL) -> tuple[np.ndarray, float]:
    """Least-squares ``x`` for ``U x = m``; raises if the residual exceeds ``tol``."""
    m = m.values if isinstance(m, OperatorVector) else np.asarray(m, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if u.ndim == 1:
        u = u[:, None]
    basis = _Orthobasis(u.shape[0])
    for j in range(u.shape[1]):
        if not basis.try_add(u[:, j], 1e-14):
            raise np.linalg.LinAlgError(f"column {j} of U is linearly dependent")
    x, res = basis.solve(m)
    if res > tol * max(1.0, float(np.linalg.norm(m))):
        raise TargetNotInSpanError(f"target residual {res:.3e} exceeds {tol:g}")
    return x, res


# -- reduction pipeline ------------------------------------------------------------


@dataclass
class TargetCoefficients:
    id: Hashable
    indices: list[int]
    coeffs: np.ndarray
    residual: float = 0.0


@dataclass
class ReducedBasis:
    n_qubits: int
    selected: list[PauliString] = field(default_factory=list)
    targets: list[TargetCoefficients] = field(default_factory=list)

    @property
    def residual(self) -> float:
        return max((t.residual for t in self.targets), default=0.0)

    @property
    def coefficients(self) -> dict[Hashable, np.ndarray]:
        """Target id -> coefficient vector aligned with ``selected``."""
        out = {}
        for t in self.targets:
            v = np.zeros(len(self.selected), dtype=complex)
            v[t.indices] = t.coeffs
            out[t.id] = v
        return out

    def target(self, tid: Hashable) -> TargetCoefficients:
        for t in self.targets:
            if t.id == tid:
                return t
        raise KeyError(tid)

    def as_pauli_sum(self, tid: Hashable) -> PauliSum:
        t = self.target(tid)
        return PauliSum.from_strings(
            [self.selected[i].scaled(c) for i, c in zip(t.indices, t.coeffs)], self.n_qubits
        ) if t.indices else PauliSum.zero(self.n_qubits)

    def value(self, tid: Hashable, expectations: Mapping[tuple[int, int], complex]) -> complex:
        t = self.target(tid)
        return complex(sum(c * expectations[self.selected[i].key] for i, c in zip(t.indices, t.coeffs)))

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "measurements": [{"string": p.label, "re": 1.0, "im": 0.0} for p in self.selected],
            "targets": [
                {
                    "id": t.id,
                    "indices": list(map(int, t.indices)),
                    "coeffs": [{"re": float(c.real), "im": float(c.imag)} for c in t.coeffs],
                    "residual": float(t.residual),
                }
                for t in self.targets
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ReducedBasis":
        sel = [PauliString.from_label(m["string"], complex(m["re"], m["im"])) for m in data["measurements"]]
        targets = [
            TargetCoefficients(
                t["id"],
                list(t["indices"]),
                np.array([complex(c["re"], c["im"]) for c in t["coeffs"]], dtype=complex),
                float(t.get("residual", 0.0)),
            )
            for t in data["targets"]
        ]
        return cls(int(data["n_qubits"]), sel, targets)


@dataclass
class _ClassResult:
    selected: list[int]
    basis: _Orthobasis
    index: dict
    vectors: list[np.ndarray]


_CLASS_CACHE: dict[tuple, _ClassResult] = {}
_CLASS_CACHE_LIMIT = 100_000


def _compress(mask: int, positions: Sequence[int]) -> int:
    return sum(1 << i for i, q in enumerate(positions) if (mask >> q) & 1)


def _class_signature(cands: list[PauliString], support: list[int], syms: Sequence[DiagonalSymmetry]) -> tuple:
    """Everything the projected vectors depend on, in support-local coordinates.

    Two classes with equal signatures project to identical vectors even if
    they sit on different qubits, so their selection can be shared.
    """
    enc = syms[0].encoding
    flips = [enc.occupation_flips(p.x) for p in cands]
    union = 0
    for f in flips:
        union |= f
    modes = mask_to_qubits(union)
    alpha = enc.alpha_positions
    rows = tuple((_compress(enc.decoder_rows[j], support), (alpha >> j) & 1) for j in modes)
    return (
        tuple(s.name for s in syms),
        len(support),
        tuple((_compress(p.x, support), _compress(p.z, support)) for p in cands),
        rows,
        tuple(_compress(f, modes) for f in flips),
    )


def _reduce_class(candidates: list[PauliString], syms: Sequence[DiagonalSymmetry], tol: float) -> _ClassResult:
    mask = local_register(candidates, syms)
    sig = (tol,) + _class_signature(candidates, mask_to_qubits(mask), syms)
    hit = _CLASS_CACHE.get(sig)
    if hit is not None:
        return hit
    projected = project_strings(candidates, syms, mask)
    index, vecs = vectorize(projected)
    basis = _Orthobasis(len(index))
    selected = [i for i in range(len(vecs)) if basis.try_add(vecs[i].values, tol)]
    res = _ClassResult(selected, basis, index, [v.values for v in vecs])
    if len(_CLASS_CACHE) >= _CLASS_CACHE_LIMIT:
        _CLASS_CACHE.clear()
    _CLASS_CACHE[sig] = res
    return res


def _target_vector(target: PauliSum, res: _ClassResult, position: Mapping[tuple[int, int], int]) -> np.ndarray:
    """Projection is linear, so the target vector is the weighted sum of candidate vectors."""
    m = np.zeros(len(res.index), dtype=complex)
    for key, c in target.terms.items():
        i = position.get(key)
        if i is None:
            raise TargetNotInSpanError(f"target string {key} is not among the candidates")
        m += c * res.vectors[i]
    return m


def _slot(out: ReducedBasis, slot: dict, p: PauliString) -> int:
    if p.key not in slot:
        slot[p.key] = len(out.selected)
        out.selected.append(p)
    return slot[p.key]


def reduce_measurements(
    targets: Sequence[FermionOperator] | Mapping[Hashable, FermionOperator],
    enc: EncodingSpec,
    syms: Sequence[DiagonalSymmetry],
    policy: Callable[[PauliString], tuple] = default_policy,
    tol: float = INDEPENDENCE_TOL,
) -> ReducedBasis:
    """Encode, project, select and solve for every target.

    Targets whose ladder products expand to the same set of Pauli strings
    form one class and share a candidate pool; measurement strings are
    de-duplicated across classes in first-seen order.
    """
    items = list(targets.items()) if isinstance(targets, Mapping) else list(enumerate(targets))
    n = enc.n_qubits
    classes: dict[frozenset, list[tuple[Hashable, PauliSum]]] = {}
    for tid, op in items:
        keys = frozenset(term_strings(op, enc))
        classes.setdefault(keys, []).append((tid, encode_cached(op, enc)))

    out = ReducedBasis(n)
    slot: dict[tuple[int, int], int] = {}
    coeffs_by_id: dict[Hashable, TargetCoefficients] = {}
    for keys, members in classes.items():
        if not keys:
            for tid, _ in members:
                coeffs_by_id[tid] = TargetCoefficients(tid, [], np.zeros(0, dtype=complex))
            continue
        cands = sorted((PauliString(n, x, z) for x, z in keys), key=policy)
        if not syms:
            # distinct strings are orthogonal: every candidate stays, coefficients are the encoded ones
            if all(not pauli.terms for _, pauli in members):
                for tid, _ in members:
                    coeffs_by_id[tid] = TargetCoefficients(tid, [], np.zeros(0, dtype=complex))
                continue
            gidx = [_slot(out, slot, p) for p in cands]
            for tid, pauli in members:
                x = np.array([pauli.terms.get(p.key, 0j) for p in cands], dtype=complex)
                coeffs_by_id[tid] = TargetCoefficients(tid, list(gidx), x, 0.0)
            continue
        res = _reduce_class(cands, syms, tol)
        position = {p.key: i for i, p in enumerate(cands)}
        vectors = [_target_vector(pauli, res, position) for _, pauli in members]
        if all(np.linalg.norm(m) < tol for m in vectors):
            # vanishes on every symmetric state: nothing to measure
            for tid, _ in members:
                coeffs_by_id[tid] = TargetCoefficients(tid, [], np.zeros(0, dtype=complex))
            continue
        gidx = [_slot(out, slot, cands[i]) for i in res.selected]
        for (tid, _), m in zip(members, vectors):
            x, r = res.basis.solve(m)
            if r > SOLVE_TOL * max(1.0, float(np.linalg.norm(m))):
                raise TargetNotInSpanError(f"target {tid!r}: residual {r:.3e}")
            coeffs_by_id[tid] = TargetCoefficients(tid, list(gidx), x, r)
    out.targets = [coeffs_by_id[tid] for tid, _ in items]
    return out


def naive_strings(targets: Iterable[FermionOperator], enc: EncodingSpec) -> list[PauliString]:
    """Distinct Pauli strings with non-zero weight in the encoded targets."""
    seen: dict[tuple[int, int], None] = {}
    for op in targets:
        for key in encode_cached(op, enc).terms:
            seen.setdefault(key, None)
    return [PauliString(enc.n_qubits, x, z) for x, z in seen]


# -- count tables ------------------------------------------------------------------


@dataclass(frozen=True)
class CountTableRow:
    k: int
    spin_class: str
    q_sites: int | str
    naive: int
    reduced: int

    @property
    def zero_class(self) -> bool:
        return self.q_sites == ZERO_CLASS

    def to_json(self) -> dict:
        return {"k": self.k, "spin_class": self.spin_class, "q_sites": self.q_sites,
                "naive": self.naive, "reduced": self.reduced}


def _row_order(row: CountTableRow) -> tuple:
    n_beta = sum(ch == "β" for ch in row.spin_class)
    return (n_beta, row.zero_class, row.q_sites if not row.zero_class else 0)


def count_table(k: int, kind: str = "jordan_wigner", symmetries: Sequence[str] = ("N", "Sz"),
                layout: str = "blocked") -> list[CountTableRow]:
    """Naive and reduced string counts for one representative per spin class."""
    from spt.symproj import parse_symmetries

    n_spatial = 2 * k
    enc = EncodingSpec.make(kind, 2 * n_spatial, layout)
    syms = parse_symmetries(list(symmetries), enc)
    reps = {}
    for spec in enumerate_rdm(k, n_spatial):
        key = classify(spec)
        reps.setdefault(key, spec)
    rows = []
    for (label, q), spec in reps.items():
        real, imag = hermitian_components(rdm_element_operator(spec))
        targets = [t for t in (real, imag) if not t.is_zero()]
        naive = len(naive_strings(targets, enc))
        reduced = len(reduce_measurements(targets, enc, syms).selected)
        rows.append(CountTableRow(k, label, q, naive, reduced))
    rows.sort(key=_row_order)
    return rows
