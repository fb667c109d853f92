"""Small dense density-matrix simulator and the 4-qubit H2 tomography experiment.

Noise follows the usual device-derived recipe: every physical gate is
followed by a depolarizing channel sized so that, together with thermal
relaxation over the gate length, the gate reaches its calibrated error;
relaxation then acts on every qubit the gate touched. Readout errors are
independent bit flips. All error probabilities are multiplied by
``(1/2)**n`` at noise level ``n``.

Qubit ``q`` (0-based) is bit ``q`` of a basis index, as in :mod:`spt.pauli`.
Gate and Kraus matrices on several qubits use the same little-endian order
over the listed qubits.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from spt.encode import EncodingSpec, encode
from spt.fermion import RdmElementSpec, SpinOrbital, enumerate_rdm, rdm_element_operator
from spt.group import Grouping, group_strings
from spt.pauli import PauliString, bits_to_str
from spt.reduce import ReducedBasis, naive_strings, reduce_measurements
from spt.study import rdm_targets
from spt.symproj import parse_symmetries

log = logging.getLogger(__name__)

PLANCK = 6.62607015e-34
BOLTZMANN = 1.380649e-23
COMPLETENESS_TOL = 1e-10
PSD_TOL = 1e-9
CHOI_EIG_CUTOFF = 1e-12

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_S = np.diag([1, 1j])
_CX = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)  # control = local bit 0


class ChannelError(ValueError):
    """Kraus set is not trace preserving or does not fit the target qubits."""


class ParameterError(ValueError):
    """Device or channel parameters describe a non-physical process."""


# -- linear algebra helpers ---------------------------------------------------


@lru_cache(maxsize=None)
def _local_index(qubits: tuple[int, ...], n: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n)
    local = np.zeros_like(idx)
    rest = idx.copy()
    for i, q in enumerate(qubits):
        bit = (idx >> q) & 1
        local |= bit << i
        rest &= ~(1 << q)
    return local, rest


def embed(m: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Full ``2^n`` matrix of an operator on ``qubits`` (little-endian local order)."""
    qubits = tuple(int(q) for q in qubits)
    if m.shape != (1 << len(qubits),) * 2:
        raise ChannelError(f"matrix of shape {m.shape} does not act on {len(qubits)} qubit(s)")
    if len(set(qubits)) != len(qubits) or any(not 0 <= q < n for q in qubits):
        raise ChannelError(f"invalid target qubits {qubits} for {n} qubits")
    local, rest = _local_index(qubits, n)
    return m[local[:, None], local[None, :]] * (rest[:, None] == rest[None, :])


def pauli_matrix(letters: str) -> np.ndarray:
    """Little-endian tensor product: ``letters[0]`` acts on local qubit 0."""
    mats = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}
    out = np.ones((1, 1), dtype=complex)
    for ch in letters:
        out = np.kron(mats[ch], out)
    return out


# -- states and channels ------------------------------------------------------------


@dataclass
class DensityMatrix:
    n_qubits: int
    data: np.ndarray

    @classmethod
    def from_statevector(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        n = int(round(math.log2(psi.shape[0])))
        return cls(n, np.outer(psi, psi.conj()))

    @classmethod
    def basis_state(cls, bits: int, n: int) -> "DensityMatrix":
        psi = np.zeros(1 << n, dtype=complex)
        psi[bits] = 1.0
        return cls.from_statevector(psi)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n_qubits, self.data.copy())

    def apply_unitary(self, u: np.ndarray, qubits: Sequence[int]) -> "DensityMatrix":
        full = embed(u, qubits, self.n_qubits)
        return DensityMatrix(self.n_qubits, full @ self.data @ full.conj().T)

    def probabilities(self) -> np.ndarray:
        p = np.clip(self.data.diagonal().real, 0.0, None)
        return p / p.sum()

    def reduced(self, qubits: Sequence[int]) -> np.ndarray:
        """Partial trace keeping ``qubits`` (little-endian local order)."""
        n = self.n_qubits
        letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
        # tensor axis a holds qubit n-1-a
        row = [letters[a] for a in range(n)]
        col = [letters[n + a] for a in range(n)]
        for q in range(n):
            if q not in qubits:
                col[n - 1 - q] = row[n - 1 - q]
        out_row = "".join(row[n - 1 - q] for q in reversed(qubits))
        out_col = "".join(col[n - 1 - q] for q in reversed(qubits))
        t = self.data.reshape((2,) * (2 * n))
        k = len(qubits)
        return np.einsum("".join(row + col) + "->" + out_row + out_col, t).reshape(1 << k, 1 << k)

    def check(self, tol: float = 1e-10, psd_tol: float = PSD_TOL) -> None:
        d = self.data
        if abs(np.trace(d) - 1) > tol:
            raise ValueError(f"trace deviates from 1 by {abs(np.trace(d) - 1):.2e}")
        if np.max(np.abs(d - d.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        lo = np.linalg.eigvalsh((d + d.conj().T) / 2).min()
        if lo < -psd_tol:
            raise ValueError(f"density matrix has eigenvalue {lo:.2e}")


@dataclass
class Channel:
    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        self.kraus = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not self.kraus:
            raise ChannelError("a channel needs at least one Kraus operator")
        dim = self.kraus[0].shape[0]
        if dim not in (2, 4) and dim & (dim - 1):
            raise ChannelError("Kraus operators must act on whole qubits")
        if any(k.shape != (dim, dim) for k in self.kraus):
            raise ChannelError("Kraus operators differ in shape")

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.dim)))

    def completeness_error(self) -> float:
        acc = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(acc - np.eye(self.dim))))

    def validate(self, tol: float = COMPLETENESS_TOL) -> "Channel":
        err = self.completeness_error()
        if err > tol:
            raise ChannelError(f"Kraus completeness violated by {err:.2e}")
        return self

    def average_fidelity(self) -> float:
        """Average gate fidelity against the identity, ``(sum |Tr K|^2 + d) / (d(d+1))``."""
        d = self.dim
        return float((sum(abs(np.trace(k)) ** 2 for k in self.kraus) + d) / (d * (d + 1)))

    def superoperator(self) -> np.ndarray:
        """Column-stacking superoperator ``sum conj(K) (x) K``."""
        return sum(np.kron(k.conj(), k) for k in self.kraus)

    def tensor(self, other: "Channel") -> "Channel":
        """``self`` on local qubits below ``other``'s (little-endian)."""
        return Channel(tuple(np.kron(b, a) for a in self.kraus for b in other.kraus))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus)


def identity_channel(n_qubits: int = 1) -> Channel:
    return Channel((np.eye(1 << n_qubits, dtype=complex),))


def apply_channel(rho: DensityMatrix, ch: Channel, qubits: Sequence[int]) -> DensityMatrix:
    """``rho -> sum K rho K^dagger`` with the Kraus operators placed on ``qubits``."""
    if ch.n_qubits != len(qubits):
        raise ChannelError(f"{ch.n_qubits}-qubit channel applied to {len(qubits)} qubit(s)")
    ch.validate()
    out = np.zeros_like(rho.data)
    for k in ch.kraus:
        full = embed(k, qubits, rho.n_qubits)
        out += full @ rho.data @ full.conj().T
    return DensityMatrix(rho.n_qubits, out)


def excited_population(freq_ghz: float, temperature_k: float) -> float:
    if temperature_k <= 0:
        return 0.0
    x = 2 * PLANCK * freq_ghz * 1e9 / (BOLTZMANN * temperature_k)
    return 0.0 if x > 700 else 1.0 / (1.0 + math.exp(x))


def thermal_relaxation_channel(t1: float, t2: float, tg: float, n1: float = 0.0, scale: float = 1.0,
                               method: str = "auto") -> Channel:
    """Amplitude and phase damping over a gate of length ``tg`` (same unit as T1, T2).

    ``method="auto"`` uses the reset/Z mixture when ``t2 <= t1`` and the Choi
    matrix otherwise; either can be forced. ``scale`` multiplies the reset
    probability and the dephasing (``p_z`` or ``1 - r_T2``).
    """
    if min(t1, t2) <= 0 or tg < 0:
        raise ParameterError("T1, T2 must be positive and the gate length non-negative")
    if not 0 <= n1 <= 1:
        raise ParameterError("excited-state population must lie in [0, 1]")
    n0 = 1.0 - n1
    r1 = math.exp(-tg / t1)
    r2 = math.exp(-tg / t2)
    p_reset = (1.0 - r1) * scale
    if method == "auto":
        method = "mixture" if t2 <= t1 else "choi"
    if method == "mixture":
        if t2 > t1:
            raise ParameterError("the mixture form needs T2 <= T1")
        p_z = 0.5 * r1 * (1.0 - r2 / r1) * scale  # (1 - p_reset) unscaled is r1
        p_id = 1.0 - p_z - p_reset
        ks = [math.sqrt(p_id) * _I2, math.sqrt(p_z) * _Z]
        for p, target in ((n0 * p_reset, 0), (n1 * p_reset, 1)):
            if p > 0:
                for src in (0, 1):
                    k = np.zeros((2, 2), dtype=complex)
                    k[target, src] = math.sqrt(p)
                    ks.append(k)
        return Channel(tuple(k for k in ks if np.any(k))).validate()
    if method != "choi":
        raise ValueError(f"unknown relaxation method {method!r}")
    coh = 1.0 - (1.0 - r2) * scale
    choi = np.array([
        [1 - n1 * p_reset, 0, 0, coh],
        [0, n1 * p_reset, 0, 0],
        [0, 0, n0 * p_reset, 0],
        [coh, 0, 0, 1 - n0 * p_reset],
    ], dtype=complex)
    return kraus_from_choi(choi)


def kraus_from_choi(choi: np.ndarray, cutoff: float = CHOI_EIG_CUTOFF) -> Channel:
    """Kraus operators of a column-convention Choi matrix ``sum |i><j| (x) E(|i><j|)``."""
    vals, vecs = np.linalg.eigh(choi)
    if vals.min() < -PSD_TOL:
        raise ParameterError(f"Choi matrix is not positive (eigenvalue {vals.min():.2e})")
    d = int(round(math.sqrt(choi.shape[0])))
    ks = [math.sqrt(v) * vecs[:, i].reshape(d, d).T for i, v in enumerate(vals) if v > cutoff]
    return Channel(tuple(ks)).validate()


def depolarizing_channel(lam: float, n_qubits: int = 1) -> Channel:
    """``(1 - lam) rho + lam I/d`` as weighted Pauli Kraus operators."""
    d2 = 4 ** n_qubits
    if not 0 <= lam <= d2 / (d2 - 1) + 1e-12:
        raise ParameterError(f"depolarizing strength {lam} outside [0, {d2}/{d2 - 1}]")
    ks = []
    for letters in product("IXYZ", repeat=n_qubits):
        w = lam / d2 + (1 - lam if set(letters) == {"I"} else 0.0)
        if w > 0:
            ks.append(math.sqrt(w) * pauli_matrix("".join(letters)))
    return Channel(tuple(ks)).validate(1e-9)


def depolarizing_strength(f_target: float, relax: Channel, d: int | None = None) -> float:
    """Depolarizing ``lam`` that brings ``relax`` down to average fidelity ``f_target``."""
    d = relax.dim if d is None else d
    f_r = relax.average_fidelity()
    if f_target > f_r:
        log.warning("target fidelity %.6g exceeds relaxation-only fidelity %.6g; no depolarizing noise", f_target, f_r)
        return 0.0
    lam = d * (f_r - f_target) / (f_r * d - 1)
    return float(min(max(lam, 0.0), d * d / (d * d - 1)))


# -- device ------------------------------------------------------------------------------

# per-qubit calibration (frequency GHz, U2 err, U3 err, RO 0|1, RO 1|0, T1 us, T2 us)
CALIBRATION_QUBITS = (
    (5.000, 3.7e-4, 4.5e-4, 3.6e-2, 8.0e-2, 93.6, 133.3),
    (4.845, 3.2e-4, 6.5e-4, 17.3e-2, 15.1e-2, 59.9, 58.5),
    (4.783, 1.7e-4, 3.3e-4, 5.7e-2, 3.6e-2, 77.7, 120.6),
    (4.858, 2.4e-4, 4.8e-4, 3.0e-2, 0.9e-2, 131.1, 187.1),
    (4.978, 13.8e-4, 27.5e-4, 5.2e-2, 2.6e-2, 101.7, None),
)
# (control, target, error, length ns)
CALIBRATION_CNOTS = (
    (0, 1, 2.0e-2, 690), (1, 0, 2.0e-2, 654), (1, 2, 1.0e-2, 498), (2, 1, 1.0e-2, 533),
    (2, 3, 1.0e-2, 626), (3, 2, 1.0e-2, 590), (3, 4, 4.8e-2, 370), (4, 3, 4.8e-2, 334),
)


@dataclass(frozen=True)
class DeviceParameters:
    """Qubit-averaged device model; times in microseconds, lengths in ns."""

    t1_us: float = 92.8
    t2_us: float = 124.875
    freq_ghz: float = 4.8928
    ro_0_given_1: float = 6.96e-2
    ro_1_given_0: float = 6.04e-2
    u2_error: float = 4.96e-4
    u3_error: float = 9.32e-4
    cx_error: float = 2.2e-2
    u2_length_ns: float = 35.0
    u3_length_ns: float = 71.0
    cx_length_ns: float = 536.875
    temperature_k: float = 0.020

    def __post_init__(self):
        for name in ("t1_us", "t2_us", "freq_ghz", "u2_length_ns", "u3_length_ns", "cx_length_ns"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        for name in ("ro_0_given_1", "ro_1_given_0", "u2_error", "u3_error", "cx_error"):
            if not 0 <= getattr(self, name) <= 1:
                raise ParameterError(f"{name} must be a probability")
        if self.temperature_k < 0:
            raise ParameterError("temperature must be non-negative")

    @classmethod
    def averaged(cls, temperature_k: float = 0.020) -> "DeviceParameters":
        """Means over the calibration table; T2 over the qubits that report it."""
        cols = list(zip(*CALIBRATION_QUBITS))
        mean = lambda xs: float(np.mean([x for x in xs if x is not None]))  # noqa: E731
        return cls(
            t1_us=mean(cols[5]), t2_us=mean(cols[6]), freq_ghz=mean(cols[0]),
            ro_0_given_1=mean(cols[3]), ro_1_given_0=mean(cols[4]),
            u2_error=mean(cols[1]), u3_error=mean(cols[2]),
            cx_error=mean([c[2] for c in CALIBRATION_CNOTS]), cx_length_ns=mean([c[3] for c in CALIBRATION_CNOTS]),
            temperature_k=temperature_k,
        )

    @property
    def excited_population(self) -> float:
        return excited_population(self.freq_ghz, self.temperature_k)

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_json(cls, data: Mapping) -> "DeviceParameters":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(f"unknown device fields {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


# -- circuits -----------------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    """``kind`` is ``cx``, ``u2``, ``u3`` (physical) or ``rz`` (virtual, noiseless)."""

    kind: str
    qubits: tuple[int, ...]
    matrix: np.ndarray = field(compare=False, repr=False)


def _zyz_theta(u: np.ndarray) -> float:
    return 2 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))


def _classify_1q(u: np.ndarray, tol: float = 1e-9) -> str | None:
    phase = u[0, 0] if abs(u[0, 0]) > tol else u[0, 1]
    if np.allclose(u / (phase / abs(phase)), _I2, atol=tol):
        return None
    theta = _zyz_theta(u)
    if theta < tol:
        return "rz"
    return "u2" if abs(theta - math.pi / 2) < tol else "u3"


def _pauli_exp(theta: float, letters: Mapping[int, str]) -> list[tuple[str, tuple[int, ...], np.ndarray]]:
    """``exp(i theta P)`` as basis change, CNOT tree onto the last qubit, Z rotation, undo."""
    qs = sorted(letters)
    pre = []
    for q in qs:
        if letters[q] == "X":
            pre.append(("1q", (q,), _H))
        elif letters[q] == "Y":
            pre.append(("1q", (q,), _H @ _S.conj().T))
    ladder = []
    layer = list(qs)
    while len(layer) > 1:
        nxt = []
        for a, b in zip(layer[::2], layer[1::2]):
            ladder.append(("cx", (a, b), _CX))
            nxt.append(b)
        if len(layer) % 2:
            nxt.append(layer[-1])
        layer = nxt
    rot = ("1q", (layer[0],), np.diag([np.exp(1j * theta), np.exp(-1j * theta)]))
    post = [(k, q, m.conj().T) for k, q, m in reversed(pre)]
    return pre + ladder + [rot] + ladder[::-1] + post


def _peephole(raw: list[tuple[str, tuple[int, ...], np.ndarray]]) -> list[tuple[str, tuple[int, ...], np.ndarray]]:
    """Merge runs of single-qubit gates, drop identities, cancel adjacent equal CNOTs."""
    changed = True
    ops = list(raw)
    while changed:
        changed = False
        out: list = []
        pending: dict[int, np.ndarray] = {}

        def flush(qs):
            for q in qs:
                if q in pending:
                    m = pending.pop(q)
                    if _classify_1q(m) is not None:
                        out.append(("1q", (q,), m))

        for op in ops:
            kind, qs, m = op
            if kind == "1q":
                q = qs[0]
                pending[q] = m @ pending.get(q, _I2)
                continue
            flush(qs)
            # cancel against the most recent op on these qubits if it is the same CNOT
            j = len(out) - 1
            while j >= 0 and not set(out[j][1]) & set(qs):
                j -= 1
            if j >= 0 and out[j][0] == "cx" and out[j][1] == qs:
                del out[j]
                changed = True
                continue
            out.append(op)
        flush(sorted(pending))
        if len(out) != len(ops):
            changed = True
        ops = out
    return ops


HF_BITS = 0b0101  # qubits 0 and 2: alpha-0 and beta-0 occupied (blocked order)


def ansatz_circuit(theta1: float, theta2: float, theta3: float) -> list[Gate]:
    """Compiled ``exp(i t1 Y0X1X2X3) exp(i t2 Y0X1) exp(i t3 Y2X3)`` acting on the HF state.

    The rightmost exponential acts first. State preparation flips qubits 0
    and 2 from ``|0000>``.
    """
    raw = [("1q", (0,), _X), ("1q", (2,), _X)]
    raw += _pauli_exp(theta3, {2: "Y", 3: "X"})
    raw += _pauli_exp(theta2, {0: "Y", 1: "X"})
    raw += _pauli_exp(theta1, {0: "Y", 1: "X", 2: "X", 3: "X"})
    gates = []
    for kind, qs, m in _peephole(raw):
        gates.append(Gate("cx" if kind == "cx" else _classify_1q(m), qs, m))
    return gates


def ansatz_statevector(theta1: float, theta2: float, theta3: float) -> np.ndarray:
    """Reference state from dense matrix exponentials (independent of the compiler)."""
    def pexp(t, label):
        return scipy.linalg.expm(1j * t * PauliString.from_label(label).to_matrix())
    psi = np.zeros(16, dtype=complex)
    psi[HF_BITS] = 1.0
    for t, label in ((theta3, "IIYX"), (theta2, "YXII"), (theta1, "YXXX")):
        psi = pexp(t, label) @ psi
    return psi


def simulate_statevector(gates: Iterable[Gate], n: int = 4) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    for g in gates:
        psi = embed(g.matrix, g.qubits, n) @ psi
    return psi


# -- noise model ----------------------------------------------------------------------------


@dataclass
class NoiseModel:
    """Per-gate channels at one noise scale ``s``."""

    device: DeviceParameters
    scale: float = 1.0
    relax: dict[str, Channel] = field(init=False, repr=False)
    depol: dict[str, Channel] = field(init=False, repr=False)
    lambdas: dict[str, float] = field(init=False)

    def __post_init__(self):
        dev, s = self.device, self.scale
        n1 = dev.excited_population
        lengths = {"u2": dev.u2_length_ns, "u3": dev.u3_length_ns, "cx": dev.cx_length_ns}
        errors = {"u2": dev.u2_error, "u3": dev.u3_error, "cx": dev.cx_error}
        self.relax, self.depol, self.lambdas = {}, {}, {}
        for kind, tg in lengths.items():
            tg_us = tg * 1e-3
            full = thermal_relaxation_channel(dev.t1_us, dev.t2_us, tg_us, n1)
            nq = 2 if kind == "cx" else 1
            ref = full.tensor(full) if nq == 2 else full
            lam = depolarizing_strength(1.0 - errors[kind], ref)
            self.lambdas[kind] = lam * s
            self.relax[kind] = thermal_relaxation_channel(dev.t1_us, dev.t2_us, tg_us, n1, scale=s)
            self.depol[kind] = depolarizing_channel(lam * s, nq)

    @property
    def readout(self) -> tuple[float, float]:
        """Scaled ``(P(read 1 | 0), P(read 0 | 1))``."""
        return self.device.ro_1_given_0 * self.scale, self.device.ro_0_given_1 * self.scale


def run_circuit(gates: Iterable[Gate], noise: NoiseModel | None, n: int = 4) -> DensityMatrix:
    rho = DensityMatrix.basis_state(0, n)
    for g in gates:
        rho = rho.apply_unitary(g.matrix, g.qubits)
        if noise is None or g.kind == "rz" or noise.scale == 0:
            continue
        rho = apply_channel(rho, noise.depol[g.kind], g.qubits)
        for q in g.qubits:
            rho = apply_channel(rho, noise.relax[g.kind], (q,))
    return rho


# -- measurement ------------------------------------------------------------------------------


def basis_change(letter: str) -> np.ndarray:
    """Single-qubit rotation taking the letter's eigenbasis to the computational one."""
    return {"I": _I2, "Z": _I2, "X": _H, "Y": _H @ _S.conj().T}[letter]


def basis_probabilities(rho: DensityMatrix, basis: PauliString, readout: tuple[float, float] = (0.0, 0.0)
                        ) -> np.ndarray:
    """Outcome distribution after an ideal basis rotation and independent readout flips."""
    n = rho.n_qubits
    u = np.ones((1, 1), dtype=complex)
    for q in range(n):
        u = np.kron(basis_change(basis.letter(q)), u)
    p = np.clip(np.real(np.diag(u @ rho.data @ u.conj().T)), 0.0, None)
    p = p / p.sum()
    p10, p01 = readout
    if p10 or p01:
        conf = np.array([[1 - p10, p01], [p10, 1 - p01]])
        t = p.reshape((2,) * n)
        for axis in range(n):
            t = np.moveaxis(np.tensordot(conf, t, axes=([1], [axis])), 0, axis)
        p = t.reshape(-1)
    return p


def measure_counts(rho: DensityMatrix, basis: PauliString | str, shots: int,
                   readout: tuple[float, float] = (0.0, 0.0), seed=None) -> dict[str, int]:
    """Sampled outcomes keyed by bitstring (qubit 0 leftmost).

    ``readout`` is ``(P(read 1 | 0), P(read 0 | 1))``.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if isinstance(basis, str):
        basis = PauliString.from_label(basis)
    p = basis_probabilities(rho, basis, readout)
    rng = np.random.default_rng(seed)
    hits = rng.multinomial(shots, p)
    return {bits_to_str(i, rho.n_qubits): int(c) for i, c in enumerate(hits) if c}


def expectation_from_distribution(p: PauliString, outcomes: np.ndarray) -> float:
    """``<p>`` from an outcome distribution over basis indices measured in a compatible basis."""
    idx = np.arange(outcomes.shape[0], dtype=np.uint64)
    parity = np.bitwise_count(idx & np.uint64(p.x | p.z)) & 1
    return float(np.sum(outcomes * (1 - 2 * parity.astype(np.int64))))


def counts_to_distribution(counts: Mapping[str, int], n: int) -> np.ndarray:
    from spt.pauli import str_to_bits
    dist = np.zeros(1 << n)
    for bits, c in counts.items():
        dist[str_to_bits(bits)] += c
    return dist / dist.sum()


# -- 2-RDM assembly -----------------------------------------------------------------------------

N_MODES = 4
_PAIRS = [(i, k) for i in range(N_MODES) for k in range(N_MODES)]


def _enc() -> EncodingSpec:
    return EncodingSpec("jw", N_MODES)


def _sorted_pair(a: int, b: int) -> tuple[tuple[int, int], int]:
    return ((a, b), 1) if a < b else ((b, a), -1)


def assemble_rdm(values: Mapping[tuple[tuple[int, int], tuple[int, int]], complex]) -> np.ndarray:
    """16x16 matrix ``D[(i,k),(j,l)] = <a+_i a+_k a_l a_j>`` from ascending-pair elements.

    ``values`` maps ``(upper, lower)`` ascending mode pairs to element values;
    missing elements (including every S_z-changing one) are zero. The other
    orderings follow from antisymmetry and Hermiticity.
    """
    d = np.zeros((len(_PAIRS), len(_PAIRS)), dtype=complex)
    for a, (i, k) in enumerate(_PAIRS):
        for b, (j, l) in enumerate(_PAIRS):
            if i == k or j == l:
                continue
            up, s1 = _sorted_pair(i, k)
            lo, s2 = _sorted_pair(j, l)
            if (up, lo) in values:
                v = values[(up, lo)]
            elif (lo, up) in values:
                v = np.conj(values[(lo, up)])
            else:
                v = 0.0
            d[a, b] = s1 * s2 * v
    return d


def exact_rdm(psi: np.ndarray) -> np.ndarray:
    """Every entry from the dense matrix of the encoded operator."""
    enc = _enc()
    d = np.zeros((len(_PAIRS), len(_PAIRS)), dtype=complex)
    for a, (i, k) in enumerate(_PAIRS):
        for b, (j, l) in enumerate(_PAIRS):
            spec = RdmElementSpec(
                (SpinOrbital.from_mode(i, 2), SpinOrbital.from_mode(k, 2)),
                (SpinOrbital.from_mode(j, 2), SpinOrbital.from_mode(l, 2)), 2,
            )
            m = encode(rdm_element_operator(spec), enc).to_matrix()
            d[a, b] = np.vdot(psi, m @ psi)
    return d


def _mode_pair(spec_tuple) -> tuple[int, int]:
    return tuple(so.mode(2) for so in spec_tuple)


@dataclass
class TomographyPlan:
    """Naive and reduced measurement sets for the H2 2-RDM with their groupings."""

    naive_terms: dict
    reduced: ReducedBasis
    target_ids: list
    naive: list[PauliString]
    naive_groups: Grouping
    reduced_groups: Grouping

    @classmethod
    def build(cls, symmetries: Sequence[str] = ("N", "Sz")) -> "TomographyPlan":
        enc = _enc()
        targets = rdm_targets(2, N_MODES, symmetries)
        syms = parse_symmetries(list(symmetries), enc)
        elements = {}
        for (spec, part) in targets:
            elements.setdefault(spec, rdm_element_operator(spec))
        naive_terms = {spec: encode(op, enc).terms for spec, op in elements.items()}
        naive = sorted(naive_strings(targets.values(), enc), key=lambda p: p.label)
        reduced = reduce_measurements(targets, enc, syms)
        sel = sorted(reduced.selected, key=lambda p: p.label)
        return cls(naive_terms, reduced, list(targets), naive, group_strings(naive), group_strings(sel))

    def naive_rdm(self, expectations: Mapping[tuple[int, int], float]) -> np.ndarray:
        vals = {}
        for spec, terms in self.naive_terms.items():
            v = sum(c * expectations[key] for key, c in terms.items())
            vals[(_mode_pair(spec.upper), _mode_pair(spec.lower))] = v
        return assemble_rdm(vals)

    def reduced_rdm(self, expectations: Mapping[tuple[int, int], float]) -> np.ndarray:
        parts: dict = {}
        for spec, part in self.target_ids:
            parts.setdefault(spec, {})[part] = self.reduced.value((spec, part), expectations)
        vals = {}
        for spec, p in parts.items():
            # T = (R - i I) / 2 with R = T + T^dagger, I = i (T - T^dagger); self-adjoint T is R itself
            vals[(_mode_pair(spec.upper), _mode_pair(spec.lower))] = (
                0.5 * (p["re"] - 1j * p["im"]) if "im" in p else p["re"]
            )
        return assemble_rdm(vals)


def estimate_expectations(rho: DensityMatrix, grouping: Grouping, shots: int | None,
                          readout: tuple[float, float], rng: np.random.Generator) -> dict:
    """Every vertex string estimated from its own group's measurement."""
    out = {}
    for basis, members in zip(grouping.bases(), grouping.groups):
        p = basis_probabilities(rho, basis, readout)
        if shots is not None:
            p = rng.multinomial(shots, p) / shots
        for i in members:
            s = grouping.vertices[i]
            out[s.key] = expectation_from_distribution(s, p)
    return out


# -- experiment ---------------------------------------------------------------------------------


def noise_scale(level: float) -> float:
    return 0.0 if math.isinf(level) else 0.5 ** level


@dataclass
class LevelSummary:
    level: float
    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    samples: list[tuple[float, float, float]] = field(default_factory=list, repr=False)


NORM_NAMES = ("ideal_vs_naive", "ideal_vs_reduced", "naive_vs_reduced")


@dataclass
class ExperimentReport:
    """Per noise level: mean and std of the three Frobenius distances."""

    levels: list[LevelSummary]
    n_states: int
    shots: int | None
    seed: int

    def level(self, n: float) -> LevelSummary:
        for lv in self.levels:
            if lv.level == n:
                return lv
        raise KeyError(n)

    def to_json(self) -> dict:
        return {
            "n_states": self.n_states,
            "shots": self.shots,
            "seed": self.seed,
            "norms": list(NORM_NAMES),
            "levels": [
                {
                    "n": "inf" if math.isinf(lv.level) else lv.level,
                    "mean": list(lv.mean),
                    "std": list(lv.std),
                    "samples": [list(s) for s in lv.samples],
                }
                for lv in self.levels
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ExperimentReport":
        levels = [
            LevelSummary(
                math.inf if lv["n"] == "inf" else float(lv["n"]),
                tuple(lv["mean"]), tuple(lv["std"]), [tuple(s) for s in lv.get("samples", [])],
            )
            for lv in data["levels"]
        ]
        return cls(levels, int(data["n_states"]), data["shots"], int(data["seed"]))

    def format_text(self) -> str:
        lines = ["n      |D-Dn|_F          |D-Dr|_F          |Dn-Dr|_F"]
        for lv in self.levels:
            name = "inf" if math.isinf(lv.level) else f"{lv.level:g}"
            cells = "  ".join(f"{m:.4f} ({s:.4f})" for m, s in zip(lv.mean, lv.std))
            lines.append(f"{name:<6} {cells}")
        return "\n".join(lines)


def random_angles(seed: int, state_index: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(state_index,)))
    return rng.uniform(0.0, 2 * math.pi, 3)


def run_experiment(levels: Sequence[float] = (0, 1, 2, 3, 4, math.inf), n_states: int = 25,
                   shots: int | None = 8192, seed: int = 42, device: DeviceParameters | None = None,
                   basis_mode: str = "both") -> ExperimentReport:
    """Noisy tomography of random H2 ansatz states with naive and reduced measurements.

    ``shots=None`` uses exact outcome distributions. Modes other than
    ``both`` still report all three norms; the unused estimate is replaced
    by the ideal matrix.
    """
    if n_states < 1:
        raise ValueError("n_states must be at least 1")
    if basis_mode not in ("naive", "reduced", "both"):
        raise ValueError(f"unknown basis mode {basis_mode!r}")
    device = device or DeviceParameters()
    plan = TomographyPlan.build()
    models = {lv: NoiseModel(device, noise_scale(lv)) for lv in levels}
    samples: dict[float, list] = {lv: [] for lv in levels}
    for s in range(n_states):
        angles = random_angles(seed, s)
        gates = ansatz_circuit(*angles)
        ideal = exact_rdm(ansatz_statevector(*angles))
        for li, lv in enumerate(levels):
            model = models[lv]
            rho = run_circuit(gates, model if model.scale > 0 else None)
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(s, li + 1)))
            d_naive = d_red = ideal
            if basis_mode in ("naive", "both"):
                d_naive = plan.naive_rdm(estimate_expectations(rho, plan.naive_groups, shots, model.readout, rng))
            if basis_mode in ("reduced", "both"):
                d_red = plan.reduced_rdm(estimate_expectations(rho, plan.reduced_groups, shots, model.readout, rng))
            samples[lv].append((
                float(np.linalg.norm(ideal - d_naive)),
                float(np.linalg.norm(ideal - d_red)),
                float(np.linalg.norm(d_naive - d_red)),
            ))
    out = []
    for lv in levels:
        arr = np.array(samples[lv])
        out.append(LevelSummary(lv, tuple(arr.mean(axis=0).tolist()), tuple(arr.std(axis=0, ddof=1).tolist()
                                if len(arr) > 1 else [0.0] * 3), samples[lv]))
    return ExperimentReport(out, n_states, shots, seed)
