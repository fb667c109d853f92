from spt.fermion import classify, ZERO_CLASS
from spt.study import build_instance, rdm_targets, sweep, symmetry_label


def test_targets_skip_sz_changing_only_with_sz():
    with_sz = rdm_targets(2, 4, ("N", "Sz"))
    without = rdm_targets(2, 4, ())
    assert all(classify(spec)[1] != ZERO_CLASS for spec, _ in with_sz)
    assert len(without) > len(with_sz)


def test_instance_is_canonical():
    a = build_instance(6, "bk", "n")
    b = build_instance(6, "bravyi_kitaev", ["N"])
    assert a is b
    assert list(a.naive) == sorted(a.naive, key=lambda p: p.key)


def test_dominance_and_ratio_small_grid():
    rows = sweep([4, 6, 8], ["jw", "parity", "bk"], [(), ("N",), ("N", "Sz")])
    for r in rows:
        assert r.reduced_circuits <= r.naive_circuits
        assert r.ratio >= 1
        assert r.fitted_n is not None
    assert {symmetry_label(s) for s in [(), ("N", "Sz")]} == {"none", "n+sz"}
