import math

import numpy as np
import pytest
from scipy.stats import unitary_group

import oracles
from spt.fermion import FermionOperator
from spt.noisesim import (
    CALIBRATION_CNOTS, CALIBRATION_QUBITS, HF_BITS, Channel, ChannelError, DensityMatrix, DeviceParameters,
    ExperimentReport, NoiseModel, ParameterError, TomographyPlan, ansatz_circuit, ansatz_statevector,
    apply_channel, basis_probabilities, depolarizing_channel, depolarizing_strength, exact_rdm,
    expectation_from_distribution, identity_channel, kraus_from_choi, measure_counts, run_circuit,
    run_experiment, simulate_statevector, thermal_relaxation_channel,
)
from spt.pauli import PauliString


def random_rho(rng, n):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return DensityMatrix.from_statevector(psi / np.linalg.norm(psi))


def test_identity_channel_leaves_state():
    rho = random_rho(np.random.default_rng(0), 3)
    out = apply_channel(rho, identity_channel(), (1,))
    np.testing.assert_allclose(out.data, rho.data)


def test_reset_channel():
    rng = np.random.default_rng(1)
    rho = random_rho(rng, 3)
    reset = Channel((np.array([[1, 0], [0, 0]]), np.array([[0, 1], [0, 0]])))
    out = apply_channel(rho, reset, (2,))
    np.testing.assert_allclose(out.reduced([2]), np.diag([1, 0]), atol=1e-12)
    out.check()


def test_full_depolarizing():
    rho = DensityMatrix.from_statevector(np.array([0.6, 0.8j]))
    out = apply_channel(rho, depolarizing_channel(1.0), (0,))
    np.testing.assert_allclose(out.data, np.eye(2) / 2, atol=1e-12)


def test_apply_channel_errors():
    rho = random_rho(np.random.default_rng(2), 2)
    with pytest.raises(ChannelError):
        apply_channel(rho, identity_channel(2), (0,))
    with pytest.raises(ChannelError):
        apply_channel(rho, Channel((0.5 * np.eye(2),)), (0,))


def test_relaxation_limits():
    ch = thermal_relaxation_channel(93.6, 133.3, 0.0)
    np.testing.assert_allclose(ch.superoperator(), np.eye(4), atol=1e-12)
    p_reset = 1 - math.exp(-35e-9 / 93.6e-6)
    assert abs(p_reset - 3.74e-4) < 5e-7
    ch = thermal_relaxation_channel(93.6, 80.0, 0.035)
    excited = apply_channel(DensityMatrix.basis_state(1, 1), ch, (0,))
    assert abs(excited.data[0, 0].real - p_reset) < 1e-12


@pytest.mark.parametrize("t1,t2", [(93.6, 133.3), (50.0, 99.0), (93.6, 60.0), (80.0, 80.0)])
@pytest.mark.parametrize("n1", [0.0, 0.01])
def test_relaxation_completeness(t1, t2, n1):
    for tg in (0.035, 0.071, 0.54, 5.0):
        assert thermal_relaxation_channel(t1, t2, tg, n1).completeness_error() < 1e-10


def test_choi_and_mixture_agree():
    rng = np.random.default_rng(4)
    t1 = 93.6
    for t2 in (t1 * (1 - 1e-6), t1 * 0.999, t1 * 0.9):
        for n1 in (0.0, 0.02):
            a = thermal_relaxation_channel(t1, t2, 0.5, n1, method="mixture")
            b = thermal_relaxation_channel(t1, t2, 0.5, n1, method="choi")
            for _ in range(10):
                rho = random_rho(rng, 1).data
                np.testing.assert_allclose(a.apply(rho), b.apply(rho), atol=1e-8)


def test_choi_rejects_negative():
    with pytest.raises(ParameterError):
        kraus_from_choi(np.diag([1.0, -0.1, 0.0, 0.1]).astype(complex))
    with pytest.raises(ParameterError):
        thermal_relaxation_channel(10.0, 30.0, 1.0)


def test_depolarizing_strength_limits():
    relax = thermal_relaxation_channel(93.6, 133.3, 0.035)
    assert depolarizing_strength(relax.average_fidelity(), relax) == 0.0
    assert depolarizing_strength(1.0, identity_channel()) == 0.0
    lam = depolarizing_strength(1 - 3.7e-4, relax)
    assert 0 < lam < 4 / 3
    # the combined channel hits the target fidelity
    dep = depolarizing_channel(lam)
    combined = Channel(tuple(r @ d for r in relax.kraus for d in dep.kraus))
    assert abs(combined.average_fidelity() - (1 - 3.7e-4)) < 1e-12


def test_depolarizing_strength_over_budget(caplog):
    relax = thermal_relaxation_channel(93.6, 133.3, 0.5)
    assert depolarizing_strength(0.9999999, relax) == 0.0


def test_measure_counts():
    rho = DensityMatrix.basis_state(0, 4)
    assert measure_counts(rho, "ZZZZ", 100, seed=1) == {"0000": 100}
    shots = 8192
    one = DensityMatrix.basis_state(0, 1)
    c = measure_counts(one, "Z", shots, readout=(0.08, 0.0), seed=5)
    sigma = math.sqrt(0.08 * 0.92 / shots)
    assert abs(c.get("1", 0) / shots - 0.08) < 3 * sigma
    mixed = DensityMatrix(1, np.eye(2) / 2)
    c = measure_counts(mixed, "Z", shots, seed=6)
    assert abs(c.get("0", 0) / shots - 0.5) < 3 * math.sqrt(0.25 / shots)
    assert measure_counts(mixed, "Z", 50, seed=9) == measure_counts(mixed, "Z", 50, seed=9)
    with pytest.raises(ValueError):
        measure_counts(mixed, "Z", 0)


def test_basis_expectations_exact():
    rng = np.random.default_rng(8)
    rho = random_rho(rng, 3)
    for label in ["XYZ", "YYI", "IXZ", "ZZZ"]:
        p = basis_probabilities(rho, PauliString.from_label(label))
        want = np.trace(oracles.pauli_dense(label) @ rho.data).real
        assert abs(expectation_from_distribution(PauliString.from_label(label), p) - want) < 1e-12


def test_ansatz_gate_counts():
    gates = ansatz_circuit(0.3, 1.1, -0.7)
    kinds = [g.kind for g in gates]
    assert kinds.count("cx") == 8
    assert kinds.count("u2") + kinds.count("u3") == 9


def _dense_ansatz(t1, t2, t3):
    """Independent statevector from the exponential formula built with scipy."""
    from scipy.linalg import expm
    psi = np.zeros(16, dtype=complex)
    psi[HF_BITS] = 1
    for t, label in ((t3, "IIYX"), (t2, "YXII"), (t1, "YXXX")):
        psi = expm(1j * t * oracles.pauli_dense(label)) @ psi
    return psi


def test_ansatz_statevector():
    rng = np.random.default_rng(11)
    psi0 = simulate_statevector(ansatz_circuit(0, 0, 0))
    assert abs(abs(psi0[HF_BITS]) - 1) < 1e-12
    for angles in [(math.pi / 2, 0, 0)] + [tuple(rng.uniform(0, 2 * math.pi, 3)) for _ in range(5)]:
        circ = simulate_statevector(ansatz_circuit(*angles))
        ref = ansatz_statevector(*angles)
        assert abs(abs(np.vdot(ref, circ)) - 1) < 1e-10
        assert abs(abs(np.vdot(_dense_ansatz(*angles), ref)) - 1) < 1e-10
    ref = ansatz_statevector(math.pi / 2, 0, 0)
    assert abs(ref[HF_BITS]) < 1e-12


def _oracle_rdm(psi):
    d = np.zeros((16, 16), dtype=complex)
    for i in range(4):
        for k in range(4):
            for j in range(4):
                for l in range(4):
                    op = FermionOperator.product(4, [(i, True), (k, True), (l, False), (j, False)])
                    d[4 * i + k, 4 * j + l] = np.vdot(psi, oracles.fermion_dense(op, "jw") @ psi)
    return d


def test_exact_rdm_against_oracle():
    psi = ansatz_statevector(0.4, 1.3, 2.2)
    np.testing.assert_allclose(exact_rdm(psi), _oracle_rdm(psi), atol=1e-12)


def test_exact_reconstruction_both_sets():
    plan = TomographyPlan.build()
    assert plan.naive_groups.circuit_count == 25 and plan.reduced_groups.circuit_count == 9
    rng = np.random.default_rng(12)
    for _ in range(5):
        psi = ansatz_statevector(*rng.uniform(0, 2 * math.pi, 3))
        exps = {p.key: p.expectation(psi).real for p in plan.naive + plan.reduced.selected}
        d = exact_rdm(psi)
        np.testing.assert_allclose(plan.naive_rdm(exps), d, atol=1e-10)
        np.testing.assert_allclose(plan.reduced_rdm(exps), d, atol=1e-10)


def test_noisy_circuit_stays_physical():
    model = NoiseModel(DeviceParameters(), 1.0)
    rho = run_circuit(ansatz_circuit(0.3, 1.1, -0.7), model)
    rho.check()
    assert 0 < model.lambdas["u2"] < 4 / 3 and 0 < model.lambdas["cx"] < 16 / 15


def test_random_gate_channel_invariants():
    rng = np.random.default_rng(13)
    rho = random_rho(rng, 3)
    relax = thermal_relaxation_channel(50.0, 70.0, 2.0, 0.05)
    depol2 = depolarizing_channel(0.1, 2)
    for _ in range(300):
        qs = tuple(rng.choice(3, size=2, replace=False))
        rho = rho.apply_unitary(unitary_group.rvs(4, random_state=rng), qs)
        rho = apply_channel(rho, depol2, qs)
        rho = apply_channel(rho, relax, qs[:1])
        rho.check()


def test_device_parameters():
    avg = DeviceParameters.averaged()
    ref = DeviceParameters()
    for k, v in ref.to_json().items():
        assert math.isclose(getattr(avg, k), v, rel_tol=1e-9), k
    assert DeviceParameters.from_json(ref.to_json()) == ref
    assert len(CALIBRATION_QUBITS) == 5 and len(CALIBRATION_CNOTS) == 8
    with pytest.raises(ParameterError):
        DeviceParameters(t1_us=-1)
    with pytest.raises(ParameterError):
        DeviceParameters.from_json({"t3_us": 1})


def test_experiment_exact_noiseless_is_zero():
    rep = run_experiment(levels=(math.inf,), n_states=3, shots=None)
    assert max(rep.level(math.inf).mean) < 1e-10


def test_experiment_report_round_trip_and_determinism():
    a = run_experiment(levels=(0, math.inf), n_states=2, shots=512, seed=3)
    b = run_experiment(levels=(0, math.inf), n_states=2, shots=512, seed=3)
    assert a.to_json() == b.to_json()
    back = ExperimentReport.from_json(a.to_json())
    assert back.to_json() == a.to_json()
    assert "inf" in a.format_text()
    with pytest.raises(ValueError):
        run_experiment(n_states=0)
