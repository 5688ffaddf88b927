import numpy as np
import pytest

from qsp_lab.circuits import (
    Circuit,
    NoiseModel,
    aphase,
    apply_density,
    apply_statevector,
    circuit_unitary,
    count_two_qubit_gates,
    cz,
    decompose,
    density_from_state,
    depolarize_pair,
    from_text,
    global_depolarize,
    gphase,
    had,
    mcpauli,
    mcphase,
    mcx,
    partial_trace,
    plus_state,
    rx,
    rz,
    rzz,
    sample_pauli_measurement,
    to_text,
    with_ancilla_zero,
    zero_state,
)
from qsp_lab.errors import DecompositionRequiredError
from qsp_lab.operators import PauliString

RNG = np.random.default_rng(20240817)


def random_state(width, rng=RNG):
    v = rng.normal(size=2**width) + 1j * rng.normal(size=2**width)
    return v / np.linalg.norm(v)


def random_density(width, rng=RNG):
    a = rng.normal(size=(2**width, 2**width)) + 1j * rng.normal(size=(2**width, 2**width))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_native_circuit(n_system, n_ancilla, n_gates, rng):
    c = Circuit(n_system, n_ancilla)
    w = c.width
    for _ in range(n_gates):
        kind = rng.choice(["RX", "RZ", "HAD", "RZZ", "CZ"])
        if kind in ("RX", "RZ", "HAD"):
            q = int(rng.integers(w))
            c.append(rx(q, rng.uniform(-np.pi, np.pi)) if kind == "RX"
                     else rz(q, rng.uniform(-np.pi, np.pi)) if kind == "RZ" else had(q))
        else:
            q0, q1 = rng.choice(w, size=2, replace=False)
            c.append(rzz(int(q0), int(q1), rng.uniform(-np.pi, np.pi)) if kind == "RZZ"
                     else cz(int(q0), int(q1)))
    return c


class TestStatevector:
    def test_empty_circuit(self):
        s = random_state(3)
        assert np.allclose(apply_statevector(Circuit(3), s), s)

    def test_hadamard(self):
        c = Circuit(1).append(had(0))
        out = apply_statevector(c, zero_state(1))
        assert np.allclose(out, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_agrees_with_unitary_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            c = random_native_circuit(2, 1, 12, rng)
            s = random_state(3, rng)
            assert np.allclose(apply_statevector(c, s), circuit_unitary(c) @ s, atol=1e-10)

    def test_norm_preserved(self):
        rng = np.random.default_rng(8)
        c = random_native_circuit(3, 0, 20, rng)
        out = apply_statevector(c, random_state(3, rng))
        assert abs(np.linalg.norm(out) - 1.0) < 1e-10


class TestUnitaryOracle:
    def test_empty(self):
        assert np.allclose(circuit_unitary(Circuit(2)), np.eye(4))

    def test_rzz_matrix(self):
        theta = 0.83
        u = circuit_unitary(Circuit(2).append(rzz(0, 1, theta)))
        e = np.exp(1j * theta / 2)
        assert np.allclose(u, np.diag([e.conjugate(), e, e, e.conjugate()]), atol=1e-12)

    def test_had_squared(self):
        c = Circuit(1).extend([had(0), had(0)])
        assert np.allclose(circuit_unitary(c), np.eye(2), atol=1e-12)

    def test_unitarity(self):
        rng = np.random.default_rng(9)
        c = random_native_circuit(2, 2, 25, rng)
        u = circuit_unitary(c)
        assert np.allclose(u @ u.conj().T, np.eye(16), atol=1e-10)

    def test_inverse_circuit(self):
        rng = np.random.default_rng(10)
        c = random_native_circuit(2, 1, 15, rng)
        u = circuit_unitary(c)
        v = circuit_unitary(c.inverse())
        assert np.allclose(u @ v, np.eye(8), atol=1e-10)


class TestStructuralGates:
    def test_mcpauli_unitary(self):
        # pattern |10>, Pauli -XZ on a 2-qubit system
        c = Circuit(2, 2).append(mcpauli((1, 0), PauliString("XZ"), -1))
        u = circuit_unitary(c)
        x = np.array([[0, 1], [1, 0]])
        z = np.diag([1, -1])
        expect = np.eye(16, dtype=complex)
        expect[8:12, 8:12] = -np.kron(x, z)
        assert np.allclose(u, expect, atol=1e-12)

    def test_mcpauli_decompose_matches(self):
        rng = np.random.default_rng(11)
        for _ in range(6):
            a = int(rng.integers(1, 3))
            n = int(rng.integers(1, 3))
            pattern = tuple(int(b) for b in rng.integers(0, 2, size=a))
            letters = "".join(rng.choice(list("IXYZ")) for _ in range(n))
            if set(letters) == {"I"} and rng.random() < 0.5:
                letters = "Z" + letters[1:]
            sign = int(rng.choice([1, -1]))
            c = Circuit(n, a).append(mcpauli(pattern, PauliString(letters), sign))
            dec = decompose(c)
            assert all(g.kind not in ("MCPAULI", "APHASE") for g in dec.gates)
            assert np.allclose(circuit_unitary(c), circuit_unitary(dec), atol=1e-10)

    def test_mcpauli_identity_sign(self):
        for a in (1, 2, 3):
            c = Circuit(1, a).append(mcpauli((1,) * a, PauliString("I"), -1))
            dec = decompose(c)
            assert np.allclose(circuit_unitary(c), circuit_unitary(dec), atol=1e-10)

    def test_aphase_action(self):
        for a in (0, 1, 2, 3):
            phi = 0.37
            c = Circuit(1, a).append(aphase(phi))
            u = circuit_unitary(c)
            d = np.full(2 ** (a + 1), np.exp(-1j * phi), dtype=complex)
            d[:2] = np.exp(1j * phi)
            assert np.allclose(u, np.diag(d), atol=1e-12)

    def test_aphase_decompose_matches(self):
        for a in (0, 1, 2, 3):
            c = Circuit(2, a).append(aphase(-0.91))
            dec = decompose(c)
            assert np.allclose(circuit_unitary(c), circuit_unitary(dec), atol=1e-10)

    def test_mcx_and_mcphase(self):
        # CCX truth table
        c = Circuit(3, 0)
        c.extend(mcx((0, 1), 2))
        u = circuit_unitary(c)
        expect = np.eye(8, dtype=complex)
        expect[6:8, 6:8] = [[0, 1], [1, 0]]
        assert np.allclose(u, expect, atol=1e-10)
        # 3-controlled phase
        c = Circuit(4, 0)
        c.extend(mcphase((0, 1, 2), 3, 0.7))
        u = circuit_unitary(c)
        expect = np.eye(16, dtype=complex)
        expect[15, 15] = np.exp(1j * 0.7)
        assert np.allclose(u, expect, atol=1e-10)


class TestDensityAndNoise:
    def test_noiseless_matches_conjugation(self):
        rng = np.random.default_rng(12)
        c = random_native_circuit(2, 1, 15, rng)
        rho = random_density(3, rng)
        u = circuit_unitary(c)
        out = apply_density(c, rho, NoiseModel())
        assert np.allclose(out, u @ rho @ u.conj().T, atol=1e-10)

    def test_per_gate_zero_probability(self):
        rng = np.random.default_rng(13)
        c = random_native_circuit(2, 0, 10, rng)
        rho = random_density(2, rng)
        a = apply_density(c, rho, NoiseModel(0.0, "per_gate_depolarizing"))
        b = apply_density(c, rho, NoiseModel())
        assert np.allclose(a, b, atol=1e-14)

    def test_depolarizing_fixed_point(self):
        rho = np.eye(4, dtype=complex) / 4.0
        c = Circuit(2).append(rzz(0, 1, np.pi / 2))
        out = apply_density(c, rho, NoiseModel(2.577e-3, "per_gate_depolarizing"))
        assert np.allclose(out, rho, atol=1e-12)

    def test_noisy_rzz_analytic(self):
        p = 2.577e-3
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0] = 1.0
        c = Circuit(2).append(rzz(0, 1, np.pi / 2))
        out = apply_density(c, rho, NoiseModel(p, "per_gate_depolarizing"))
        u = circuit_unitary(c)
        ideal = u @ rho @ u.conj().T
        assert np.allclose(out, (1 - p) * ideal + p * np.eye(4) / 4.0, atol=1e-12)

    def test_per_gate_equals_kraus_form(self):
        # (1-p_tq) ideal + p_tq I/4 == (1-p2) ideal + (p2/15) sum_P P rho P
        rng = np.random.default_rng(14)
        rho = random_density(2, rng)
        p2 = 2.416e-3
        p_tq = 16.0 * p2 / 15.0
        theta = 1.1
        c = Circuit(2).append(rzz(0, 1, theta))
        out = apply_density(c, rho, NoiseModel(p_tq, "per_gate_depolarizing"))
        u = circuit_unitary(c)
        ideal = u @ rho @ u.conj().T
        acc = (1 - p2) * ideal
        paulis = [PauliString(a + b) for a in "IXYZ" for b in "IXYZ"][1:]
        for ps in paulis:
            pm = ps.to_matrix()
            acc += (p2 / 15.0) * (pm @ ideal @ pm)
        assert np.allclose(out, acc, atol=1e-12)

    def test_channels_trace_and_positivity(self):
        rng = np.random.default_rng(15)
        c = random_native_circuit(2, 1, 20, rng)
        rho = random_density(3, rng)
        for mode in ("per_gate_depolarizing", "global_depolarizing"):
            out = apply_density(c, rho, NoiseModel(0.01, mode))
            assert abs(np.trace(out).real - 1.0) < 1e-10
            assert np.linalg.eigvalsh(out).min() > -1e-9

    def test_global_depolarize_limits(self):
        rng = np.random.default_rng(16)
        rho = random_density(2, rng)
        assert np.allclose(global_depolarize(rho, 0.0), rho)
        assert np.allclose(global_depolarize(rho, 1.0), np.eye(4) / 4.0)

    def test_global_depolarize_purity(self):
        p = 0.223
        psi = random_state(3, np.random.default_rng(17))
        rho = global_depolarize(density_from_state(psi), p)
        d = 8
        expected = (1 - p) ** 2 + 2 * (1 - p) * p / d + p**2 / d
        assert np.trace(rho @ rho).real == pytest.approx(expected, rel=1e-12)

    def test_depolarize_pair_on_subsystem(self):
        rng = np.random.default_rng(18)
        rho = random_density(3, rng)
        out = depolarize_pair(rho, 0, 2, 1.0, 3)
        red = partial_trace(out, (0, 2), 3)
        assert np.allclose(red, np.eye(4) / 4.0, atol=1e-12)
        assert np.allclose(partial_trace(out, (1,), 3), partial_trace(rho, (1,), 3), atol=1e-12)


class TestCounting:
    def test_empty(self):
        assert count_two_qubit_gates(Circuit(3)) == 0

    def test_counts_rzz_and_cz(self):
        c = Circuit(3).extend([rzz(0, 1, 0.3), cz(1, 2), had(0), rx(1, 0.2)])
        assert count_two_qubit_gates(c) == 2

    def test_undecomposed_raises(self):
        c = Circuit(2, 1).append(mcpauli((1,), PauliString("XI"), 1))
        with pytest.raises(DecompositionRequiredError):
            count_two_qubit_gates(c)

    def test_mcphase_cost_recursion(self):
        # cost(m) = 2 + 3*cost(m-1), cost(1) = 1 -> 1, 5, 17, 53
        for m, expect in ((1, 1), (2, 5), (3, 17), (4, 53)):
            c = Circuit(m + 1, 0)
            c.extend(mcphase(tuple(range(m)), m, 0.9))
            assert count_two_qubit_gates(c) == expect


class TestSampling:
    def test_deterministic_pure_state(self):
        psi = with_ancilla_zero(zero_state(1), 2)
        rho = density_from_state(psi)
        counts = sample_pauli_measurement(rho, PauliString("Z"), 100, 5, 2)
        assert counts == {("00", 1): 100}

    def test_maximally_mixed_mean(self):
        rho = np.eye(8, dtype=complex) / 8.0
        counts = sample_pauli_measurement(rho, PauliString("Z"), 20000, 6, 2)
        total = sum(o * c for (_, o), c in counts.items())
        assert abs(total / 20000) < 5.0 / np.sqrt(20000)

    def test_reproducible(self):
        rho = np.eye(8, dtype=complex) / 8.0
        a = sample_pauli_measurement(rho, PauliString("X"), 500, 42, 2)
        b = sample_pauli_measurement(rho, PauliString("X"), 500, 42, 2)
        assert a == b

    def test_conditional_mean_matches_trace(self):
        rng = np.random.default_rng(19)
        c = random_native_circuit(1, 2, 14, rng)
        rho = apply_density(c, density_from_state(zero_state(3)), NoiseModel())
        obs = PauliString("Z")
        shots = 10000
        counts = sample_pauli_measurement(rho, obs, shots, 7, 2)
        num = sum(o * cnt for (b, o), cnt in counts.items() if b == "00") / shots
        den = sum(cnt for (b, _), cnt in counts.items() if b == "00") / shots
        block = rho[:2, :2]
        exact = np.trace(obs.to_matrix() @ block).real / np.trace(block).real
        var_num = (np.trace(block).real - np.trace(obs.to_matrix() @ block).real ** 2) / (shots - 1)
        var_den = (np.trace(block).real - np.trace(block).real ** 2) / (shots - 1)
        sigma = abs(exact) * np.sqrt(var_num / num**2 + var_den / den**2) if num != 0 else 0.05
        assert abs(num / den - exact) < max(5 * sigma, 0.05)

    def test_born_frequencies(self):
        rng = np.random.default_rng(20)
        c = random_native_circuit(2, 1, 12, rng)
        rho = apply_density(c, density_from_state(zero_state(3)), NoiseModel())
        obs = PauliString("XZ")
        shots = 10000
        counts = sample_pauli_measurement(rho, obs, shots, 11, 1)
        pm = obs.to_matrix()
        for b in range(2):
            block = rho[b * 4: (b + 1) * 4, b * 4: (b + 1) * 4]
            for o in (1, -1):
                proj = (np.eye(4) + o * pm) / 2.0
                prob = np.trace(proj @ block).real
                freq = counts.get((format(b, "01b"), o), 0) / shots
                se = np.sqrt(max(prob * (1 - prob), 1e-12) / shots)
                assert abs(freq - prob) <= 5 * se + 1e-12


class TestSerialization:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(21)
        c = random_native_circuit(2, 2, 18, rng)
        c.append(aphase(0.123456789123456789))
        c.append(mcpauli((0, 1), PauliString("XY"), -1))
        c.append(gphase(-np.pi / 3))
        text = to_text(c)
        c2 = from_text(text)
        assert to_text(c2) == text
        assert c2.gates == c.gates

    def test_angle_repr_exact(self):
        c = Circuit(1).append(rx(0, 0.1 + 0.2))
        c2 = from_text(to_text(c))
        assert c2.gates[0].angle == c.gates[0].angle
