"""Qubit-wise commutation grouping by greedy sequential colouring.

The graph is stored as the *conflict* graph: an edge joins two strings that
do not qubit-wise commute, so a proper colouring is a clique cover of the
compatibility graph. Vertices are coloured in descending degree (ties by
index) and each takes the lowest colour none of its neighbours holds.

Strings inside one colour class agree letter-by-letter wherever both act,
so a class is summarised by its merged letters and a vertex can join it iff
it is qubit-wise compatible with that summary. The colouring kernel uses
this instead of walking neighbour lists; the result is identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numba
import numpy as np

from spt.pauli import PauliString, qubitwise_commutes

_WORD = 64


def _to_words(masks: Sequence[int], n_words: int) -> np.ndarray:
    out = np.zeros((len(masks), n_words), dtype=np.uint64)
    full = (1 << _WORD) - 1
    for i, m in enumerate(masks):
        for w in range(n_words):
            out[i, w] = (m >> (_WORD * w)) & full
    return out


@numba.njit(cache=True)
def _conflict(xa, za, i, xb, zb, j) -> bool:
    for w in range(xa.shape[1]):
        ax, az, bx, bz = xa[i, w], za[i, w], xb[j, w], zb[j, w]
        if ((ax ^ bx) | (az ^ bz)) & (ax | az) & (bx | bz):
            return True
    return False


@numba.njit(cache=True)
def _degrees_1w(x, z):
    # full rows without scatter writes so the inner loop vectorizes
    n = x.shape[0]
    s = x | z
    deg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        xi, zi, si = x[i], z[i], s[i]
        acc = 0
        for j in range(n):
            acc += (((xi ^ x[j]) | (zi ^ z[j])) & si & s[j]) != 0
        deg[i] = acc
    return deg


@numba.njit(cache=True)
def _degrees(x, z):
    n = x.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            if _conflict(x, z, i, x, z, j):
                deg[i] += 1
                deg[j] += 1
    return deg


@numba.njit(cache=True)
def _greedy_colour(x, z, order):
    n, nw = x.shape
    colour = np.empty(n, dtype=np.int64)
    sx = np.zeros((n, nw), dtype=np.uint64)
    sz = np.zeros((n, nw), dtype=np.uint64)
    n_col = 0
    for v in order:
        c = 0
        while c < n_col and _conflict(sx, sz, c, x, z, v):
            c += 1
        if c == n_col:
            n_col += 1
        colour[v] = c
        for w in range(nw):
            sx[c, w] |= x[v, w]
            sz[c, w] |= z[v, w]
    return colour, n_col


@dataclass
class CompatibilityGraph:
    """Conflict graph over Pauli strings (edge = not qubit-wise commuting)."""

    vertices: list[PauliString]
    x_words: np.ndarray = field(repr=False)
    z_words: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.vertices)

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return bool(_conflict(self.x_words, self.z_words, i, self.x_words, self.z_words, j))

    def neighbours(self, i: int) -> list[int]:
        return [j for j in range(len(self)) if self.has_edge(i, j)]

    def edges(self) -> Iterator[tuple[int, int]]:
        for i in range(len(self)):
            for j in range(i + 1, len(self)):
                if self.has_edge(i, j):
                    yield (i, j)

    def adjacency_bitsets(self) -> np.ndarray:
        """Packed adjacency rows (``np.packbits`` layout); quadratic memory."""
        n = len(self)
        dense = np.zeros((n, n), dtype=bool)
        for i, j in self.edges():
            dense[i, j] = dense[j, i] = True
        return np.packbits(dense, axis=1)


def build_graph(strings: Sequence[PauliString]) -> CompatibilityGraph:
    strings = list(strings)
    if not strings:
        empty = np.zeros((0, 1), dtype=np.uint64)
        return CompatibilityGraph([], empty, empty, np.zeros(0, dtype=np.int64))
    n_qubits = strings[0].n_qubits
    n_words = max(1, -(-n_qubits // _WORD))
    xw = _to_words([p.x for p in strings], n_words)
    zw = _to_words([p.z for p in strings], n_words)
    deg = _degrees_1w(xw[:, 0].copy(), zw[:, 0].copy()) if n_words == 1 else _degrees(xw, zw)
    return CompatibilityGraph(strings, xw, zw, deg)


@dataclass
class Grouping:
    groups: list[list[int]]
    vertices: list[PauliString] = field(default_factory=list, repr=False)

    @property
    def circuit_count(self) -> int:
        return len(self.groups)

    def bases(self) -> list[PauliString]:
        """Merged measurement basis of every group (identity where no member acts)."""
        out = []
        for g in self.groups:
            x = z = 0
            for i in g:
                x |= self.vertices[i].x
                z |= self.vertices[i].z
            out.append(PauliString(self.vertices[g[0]].n_qubits, x, z))
        return out

    def to_json(self) -> dict:
        return {
            "circuit_count": self.circuit_count,
            "vertices": [v.label for v in self.vertices],
            "groups": [
                {"basis": b.label, "members": list(g)} for g, b in zip(self.groups, self.bases())
            ],
        }

    @classmethod
    def from_json(cls, data) -> "Grouping":
        vertices = [PauliString.from_label(v) for v in data.get("vertices", [])]
        groups = [[int(i) for i in g["members"]] for g in data.get("groups", [])]
        return cls(groups, vertices)

    def check(self) -> None:
        """Assert that the groups partition the vertices into QWC sets."""
        seen = sorted(i for g in self.groups for i in g)
        assert seen == list(range(len(self.vertices))), "groups do not partition the vertices"
        for g in self.groups:
            for a in range(len(g)):
                for b in range(a + 1, len(g)):
                    assert qubitwise_commutes(self.vertices[g[a]], self.vertices[g[b]]), "group is not QWC"


def colouring_order(g: CompatibilityGraph) -> np.ndarray:
    """Vertices by descending degree, ties by ascending index."""
    return np.lexsort((np.arange(len(g)), -g.degrees)).astype(np.int64)


def clique_cover(g: CompatibilityGraph) -> Grouping:
    if len(g) == 0:
        return Grouping([], [])
    colour, n_col = _greedy_colour(g.x_words, g.z_words, colouring_order(g))
    groups: list[list[int]] = [[] for _ in range(n_col)]
    for v, c in enumerate(colour.tolist()):
        groups[c].append(v)
    return Grouping(groups, g.vertices)


def group_strings(strings: Sequence[PauliString]) -> Grouping:
    return clique_cover(build_graph(strings))


@dataclass(frozen=True)
class ScalingFit:
    points: tuple[tuple[float, float], ...]
    exponent: float
    prefactor: float

    def predict(self, r: float) -> float:
        return self.prefactor * r ** self.exponent


def scaling_fit(points: Sequence[tuple[float, float]]) -> ScalingFit:
    """Least-squares power law ``circuits = prefactor * r**exponent`` in log-log space."""
    pts = [(float(r), float(c)) for r, c in points]
    if len(pts) < 3:
        raise ValueError("a scaling fit needs at least 3 points")
    if any(r <= 0 or c <= 0 for r, c in pts):
        raise ValueError("scaling fit needs positive qubit and circuit counts")
    lr = np.log([r for r, _ in pts])
    lc = np.log([c for _, c in pts])
    slope, intercept = np.polyfit(lr, lc, 1)
    return ScalingFit(tuple(pts), float(slope), float(np.exp(intercept)))
