import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spt.group import Grouping, build_graph, clique_cover, colouring_order, group_strings, scaling_fit
from spt.pauli import PauliString, qubitwise_commutes
from spt.study import build_instance

P = PauliString.from_label

# H2 measurement circuit lists, qubits in label order
NAIVE_H2 = [
    "YXZZ", "XXZZ", "YYZZ", "XYZZ", "ZZYX", "ZZXX", "ZZYY", "ZZXY", "YXYX", "XXYX", "YYYX", "XYYX", "YXXX",
    "XXXX", "YYXX", "XYXX", "YXYY", "XXYY", "YYYY", "XYYY", "YXXY", "XXXY", "YYXY", "XYXY", "ZZZZ",
]
REDUCED_H2 = ["XXZZ", "YXZZ", "ZZXX", "ZZYX", "XXXX", "XXYX", "YXXX", "YXYX", "ZZZZ"]


def test_graph_examples():
    g = build_graph([P("XX"), P("XY")])
    assert list(g.edges()) == [(0, 1)]
    g = build_graph([P("ZZ"), P("ZI"), P("IZ")])
    assert list(g.edges()) == []


def test_cover_complete_and_edgeless():
    complete = [P("XX"), P("YY"), P("ZZ"), P("XY")]
    g = build_graph(complete)
    assert len(list(g.edges())) == 6
    assert clique_cover(g).circuit_count == 4
    edgeless = [P("ZZI"), P("ZIZ"), P("IZZ"), P("ZZZ")]
    assert clique_cover(build_graph(edgeless)).circuit_count == 1


def test_empty():
    gr = group_strings([])
    assert gr.circuit_count == 0 and gr.to_json()["groups"] == []


@pytest.mark.parametrize("labels,count", [(NAIVE_H2, 25), (REDUCED_H2, 9)])
def test_h2_lists(labels, count):
    gr = group_strings([P(l) for l in labels])
    gr.check()
    assert gr.circuit_count == count


def test_h2_pipeline():
    inst = build_instance(4, "jw", ("N", "Sz"))
    assert (inst.naive_circuits, inst.reduced_circuits) == (25, 9)


def _reference_greedy(strings):
    """Plain neighbour-list greedy colouring in descending degree order."""
    n = len(strings)
    adj = [[j for j in range(n) if j != i and not qubitwise_commutes(strings[i], strings[j])] for i in range(n)]
    order = sorted(range(n), key=lambda i: (-len(adj[i]), i))
    colour = {}
    for v in order:
        used = {colour[u] for u in adj[v] if u in colour}
        c = 0
        while c in used:
            c += 1
        colour[v] = c
    return colour


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda n: st.lists(st.text("IXYZ", min_size=n, max_size=n), min_size=1, max_size=30, unique=True)))
def test_matches_reference_greedy(labels):
    strings = [P(l) for l in labels]
    g = build_graph(strings)
    ref = _reference_greedy(strings)
    assert [len(g.neighbours(i)) for i in range(len(g))] == g.degrees.tolist()
    gr = clique_cover(g)
    gr.check()
    got = {v: c for c, members in enumerate(gr.groups) for v in members}
    assert got == ref


def test_multi_word_registers():
    rng = np.random.default_rng(3)
    labels = ["".join(rng.choice(list("IIIXYZ"), size=70)) for _ in range(40)]
    strings = [P(l) for l in labels]
    gr = group_strings(strings)
    gr.check()
    ref = _reference_greedy(strings)
    assert gr.circuit_count == max(ref.values()) + 1


def test_order_ties_by_index():
    g = build_graph([P("XX"), P("YY"), P("ZZ")])
    assert colouring_order(g).tolist() == [0, 1, 2]


def test_json_round_trip():
    gr = group_strings([P(l) for l in NAIVE_H2])
    back = Grouping.from_json(gr.to_json())
    assert back.groups == gr.groups
    assert [v.label for v in back.vertices] == NAIVE_H2
    back.check()


def test_scaling_fit_examples():
    assert math.isclose(scaling_fit([(4, 16), (8, 64), (16, 256)]).exponent, 2.0)
    fit = scaling_fit([(4, 256), (8, 4096), (16, 65536)])
    assert math.isclose(fit.exponent, 4.0)
    assert math.isclose(fit.predict(32), 32 ** 4)
    with pytest.raises(ValueError):
        scaling_fit([(4, 1), (8, 2)])
    with pytest.raises(ValueError):
        scaling_fit([(4, 1), (8, 0), (16, 3)])


def test_naive_term_exponent():
    inst = [build_instance(r, "jw", None) for r in (4, 6, 8, 10, 12)]
    fit = scaling_fit([(i.r, len(i.naive)) for i in inst])
    assert abs(fit.exponent - 4) <= 0.3
