import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from spt.encode import EncodingSpec, encode
from spt.fermion import FermionOperator
from spt.pauli import PauliString, PauliSum
from spt.symproj import (
    DiagonalSymmetry, ProjectedOperator, UnsupportedSymmetryError, decompose_support, parse_symmetries,
    project, project_strings, project_sum,
)

SYM_SETS = {"n": (0,), "sz": (1,), "n,sz": (0, 1)}


def syms(text, kind="jw", n=2, layout="blocked"):
    return parse_symmetries(text, EncodingSpec.make(kind, n, layout))


def test_decompose_support():
    d = decompose_support(PauliString.from_label("XYZZ"))
    assert d.support == (0, 1) and d.z_tail == (2, 3) and d.local.label == "XY"
    d = decompose_support(PauliString.from_label("ZZZZ"))
    assert d.support == () and d.z_tail == (0, 1, 2, 3)
    d = decompose_support(PauliString.from_label("XXXX"))
    assert d.support == (0, 1, 2, 3) and d.z_tail == ()


def test_project_examples():
    n = syms("n")
    assert project(PauliString.from_label("XX"), n).entries == {("10", "01"): 1, ("01", "10"): 1}
    assert project(PauliString.from_label("XY"), n).entries == {("10", "01"): -1j, ("01", "10"): 1j}
    assert project(PauliString.from_label("X"), syms("n", n=1)).is_zero()
    zz = project(PauliString.from_label("ZZ"), n)
    np.testing.assert_allclose(zz.embed(), np.diag([1, -1, -1, 1]))


def test_project_sum_examples():
    n = syms("n")
    f = PauliString.from_label
    s = PauliSum.from_strings([f("XX", 0.25), f("YY", 0.25)])
    assert project_sum(s, n).entries == {("10", "01"): 0.5, ("01", "10"): 0.5}
    assert project_sum(PauliSum.zero(2), n).is_zero()
    # both modes alpha: Sz adds nothing beyond N
    enc = EncodingSpec("jw", 2, mode_spins=("a", "a"))
    op = FermionOperator.product(2, [(0, True), (1, False)]) + FermionOperator.product(2, [(1, True), (0, False)])
    pauli = encode(op, enc)
    both = project_sum(pauli, parse_symmetries("n,sz", enc)).embed()
    only_n = project_sum(pauli, parse_symmetries("n", enc)).embed()
    np.testing.assert_allclose(both, only_n)


def test_unsupported_symmetry():
    with pytest.raises(UnsupportedSymmetryError):
        DiagonalSymmetry("S2", EncodingSpec("jw", 4))
    with pytest.raises(UnsupportedSymmetryError):
        parse_symmetries("n,s2", EncodingSpec("jw", 4))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(["jw", "parity", "bk"]), st.sampled_from(list(SYM_SETS)),
       st.sampled_from(["blocked", "interleaved"]), st.integers(2, 3), st.data())
def test_project_matches_dense_projectors(kind, sym_text, layout, half, data):
    n = 2 * half
    label = data.draw(st.text("IXYZ", min_size=n, max_size=n))
    enc = EncodingSpec.make(kind, n, layout)
    p = PauliString.from_label(label, data.draw(st.sampled_from([1, -1j, 0.5 + 0.5j])))
    projs = oracles.projectors(oracles.sector_labels(kind, n, enc.alpha_positions), SYM_SETS[sym_text])
    want = oracles.project_dense(p.coeff * oracles.pauli_sparse(label), projs).toarray()
    got = project(p, parse_symmetries(sym_text, enc))
    np.testing.assert_allclose(got.embed(), want, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["jw", "parity", "bk"]), st.data())
def test_project_strings_shared_support(kind, data):
    n = 4
    enc = EncodingSpec(kind, n)
    labels = data.draw(st.lists(st.text("IXYZ", min_size=n, max_size=n), min_size=1, max_size=5, unique=True))
    ss = parse_symmetries("n,sz", enc)
    projs = oracles.projectors(oracles.sector_labels(kind, n, enc.alpha_positions), (0, 1))
    ops = project_strings([PauliString.from_label(l) for l in labels], ss)
    assert len({o.support for o in ops}) == 1
    for l, o in zip(labels, ops):
        want = oracles.project_dense(oracles.pauli_sparse(l), projs).toarray()
        np.testing.assert_allclose(o.embed(), want, atol=1e-12)


def test_json_round_trip():
    enc = EncodingSpec("bk", 4)
    for label in ["XYZZ", "XXXX", "ZIZI", "YZXI"]:
        op = project(PauliString.from_label(label), parse_symmetries("n,sz", enc))
        back = ProjectedOperator.from_json(op.to_json(), 4)
        np.testing.assert_allclose(back.embed(), op.embed())
        assert back.entries == op.entries
