import itertools
from math import comb

import pytest

from spt.fermion import (
    ZERO_CLASS, FermionOperator, RdmElementSpec, classify, enumerate_rdm, hermitian_components,
    rdm_element_operator,
)


def spec(upper, lower, n_spatial):
    return RdmElementSpec.parse(upper, lower, n_spatial)


def test_rdm_operator_order():
    s = spec(["1a"], ["2a"], 2)
    assert rdm_element_operator(s) == FermionOperator.product(4, [(0, True), (1, False)])
    # a†_i a†_k a_l a_j for upper (i, k) and lower (j, l)
    s = spec(["1a", "1b"], ["2a", "2b"], 2)
    assert rdm_element_operator(s) == FermionOperator.product(4, [(0, True), (2, True), (3, False), (1, False)])


def test_rdm_operator_range():
    with pytest.raises(IndexError):
        spec(["3a"], ["1a"], 2)


def test_hermitian_components():
    op = FermionOperator.product(2, [(0, True), (1, False)])
    real, imag = hermitian_components(op)
    assert real == op + op.adjoint()
    assert imag == 1j * op - 1j * op.adjoint()
    num = FermionOperator.product(2, [(0, True), (0, False)])
    real, imag = hermitian_components(num)
    assert real == num and imag.is_zero()


def test_classify_examples():
    assert classify(spec(["1a"], ["2a"], 2)) == ("ᾱᾱ", 2)
    assert classify(spec(["1a", "2b"], ["3a", "4b"], 4)) == ("ᾱᾱβ̄β̄", 4)
    assert classify(spec(["1a"], ["1b"], 1))[1] == ZERO_CLASS


def test_enumerate_k1_single_orbital():
    specs = enumerate_rdm(1, 1)
    non_zero = [s for s in specs if classify(s)[1] != ZERO_CLASS]
    assert len(non_zero) == 2
    assert all(s.is_diagonal for s in non_zero)
    assert any(classify(s)[1] == ZERO_CLASS for s in specs)


def _brute(k, n_spatial):
    modes = range(2 * n_spatial)
    tuples = list(itertools.combinations(modes, k))
    return {frozenset({u, l}) for u in tuples for l in tuples}


def test_enumerate_k2_counts():
    specs = [s for s in enumerate_rdm(2, 2) if not s.excluded]
    pairs = {frozenset({tuple(sorted(s.upper_modes)), tuple(sorted(s.lower_modes))}) for s in specs}
    assert len(pairs) == comb(4, 2) * (comb(4, 2) + 1) // 2 == 21
    assert pairs == _brute(2, 2)


def test_enumerate_k1_two_orbitals():
    specs = [s for s in enumerate_rdm(1, 2) if not s.excluded]
    classes = [classify(s) for s in specs]
    diag = [s for s, c in zip(specs, classes) if s.is_diagonal]
    off_same = [s for s, c in zip(specs, classes) if not s.is_diagonal and c[1] != ZERO_CLASS]
    zero = [s for s, c in zip(specs, classes) if c[1] == ZERO_CLASS]
    assert len(diag) == 4 and len(off_same) == 2 and len(zero) > 0


def test_json_round_trip():
    op = FermionOperator.product(4, [(0, True), (2, True), (3, False), (1, False)], 0.5 - 2j)
    op = op + FermionOperator.product(4, [(1, True), (1, False)], 3)
    assert FermionOperator.from_json(op.to_json()) == op
