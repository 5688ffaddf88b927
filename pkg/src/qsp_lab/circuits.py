"""Gate-level circuit IR with statevector and density-matrix simulation.

The register layout puts the ancilla qubits first (indices 0..n_ancilla-1,
most significant bits) followed by the system register, so a basis index
below 2**n_system means the ancillas are in the all-zero state.

Native gate set: RX, RZ, RZZ, CZ, HAD, plus a bookkeeping GPHASE that
carries the global phase exact synthesis requires.  MCPAULI (an
ancilla-pattern-controlled Pauli) and APHASE (the ancilla-register phase
exp(i*phi*(2|0..0><0..0| - 1))) are structural gates that decompose()
expands into the native set.

Noise follows the two-qubit depolarizing model: every RZZ and CZ is
followed by a channel that with probability p_tq replaces the pair's
state by I/4.  Single-qubit gates are noiseless.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DecompositionRequiredError, DimensionError
from .operators import PAULI_1Q, PauliString

NATIVE_KINDS = ("RX", "RZ", "RZZ", "CZ", "HAD", "GPHASE")
STRUCTURAL_KINDS = ("MCPAULI", "APHASE")

_HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...] = ()
    angle: float = 0.0
    pattern: tuple[int, ...] = ()  # MCPAULI ancilla control pattern
    pauli: PauliString | None = None  # MCPAULI system Pauli
    sign: int = 1

    def __post_init__(self):
        if self.kind not in NATIVE_KINDS + STRUCTURAL_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")
        if self.kind in ("RZZ", "CZ") and len(self.qubits) != 2:
            raise ValueError(f"{self.kind} acts on exactly 2 qubits")
        if self.kind in ("RX", "RZ", "HAD") and len(self.qubits) != 1:
            raise ValueError(f"{self.kind} acts on exactly 1 qubit")


def rx(q: int, angle: float) -> Gate:
    return Gate("RX", (q,), angle)


def rz(q: int, angle: float) -> Gate:
    return Gate("RZ", (q,), angle)


def rzz(q0: int, q1: int, angle: float) -> Gate:
    return Gate("RZZ", (q0, q1), angle)


def cz(q0: int, q1: int) -> Gate:
    return Gate("CZ", (q0, q1))


def had(q: int) -> Gate:
    return Gate("HAD", (q,))


def gphase(angle: float) -> Gate:
    return Gate("GPHASE", (), angle)


def aphase(angle: float) -> Gate:
    return Gate("APHASE", (), angle)


def mcpauli(pattern: tuple[int, ...], pauli: PauliString, sign: int = 1) -> Gate:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return Gate("MCPAULI", (), 0.0, tuple(pattern), pauli, sign)


@dataclass
class Circuit:
    n_system: int
    n_ancilla: int = 0
    gates: list[Gate] = field(default_factory=list)

    @property
    def width(self) -> int:
        return self.n_system + self.n_ancilla

    @property
    def ancilla_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_ancilla))

    def system_qubit(self, i: int) -> int:
        return self.n_ancilla + i

    def append(self, gate: Gate) -> "Circuit":
        for q in gate.qubits:
            if not 0 <= q < self.width:
                raise ValueError(f"qubit {q} out of range for width {self.width}")
        self.gates.append(gate)
        return self

    def extend(self, gates) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __len__(self) -> int:
        return len(self.gates)

    def copy(self) -> "Circuit":
        return Circuit(self.n_system, self.n_ancilla, list(self.gates))

    def inverse(self) -> "Circuit":
        """Exact gate-list inversion: reversed order, negated angles."""
        inv = Circuit(self.n_system, self.n_ancilla)
        for g in reversed(self.gates):
            if g.kind in ("RX", "RZ", "RZZ", "APHASE", "GPHASE"):
                inv.gates.append(replace(g, angle=-g.angle))
            else:  # HAD, CZ, MCPAULI are self-inverse
                inv.gates.append(g)
        return inv


@dataclass(frozen=True)
class NoiseModel:
    p_tq: float = 0.0
    mode: str = "none"  # none | per_gate_depolarizing | global_depolarizing

    def __post_init__(self):
        if not 0.0 <= self.p_tq < 1.0:
            raise ValueError("p_tq must lie in [0, 1)")
        if self.mode not in ("none", "per_gate_depolarizing", "global_depolarizing"):
            raise ValueError(f"unknown noise mode {self.mode!r}")


# ---------------------------------------------------------------------------
# Dense application helpers
# ---------------------------------------------------------------------------

def _tensor_apply(vec: np.ndarray, local: np.ndarray, axes: tuple[int, ...], width: int) -> np.ndarray:
    """Apply a 2^k x 2^k operator to the given qubit axes of a flat (2^w,) or
    (2^w, B) array."""
    shape = vec.shape
    batched = vec.ndim == 2
    t = vec.reshape([2] * width + ([shape[1]] if batched else []))
    k = len(axes)
    lm = local.reshape([2] * (2 * k))
    t = np.tensordot(lm, t, axes=(list(range(k, 2 * k)), list(axes)))
    t = np.moveaxis(t, list(range(k)), list(axes))
    return t.reshape(shape)


def _gate_local(gate: Gate, circuit: Circuit) -> tuple[np.ndarray | None, tuple[int, ...], complex]:
    """Return (local unitary, target axes, scalar phase) for a gate."""
    kind = gate.kind
    if kind == "RX":
        c, s = np.cos(gate.angle / 2), np.sin(gate.angle / 2)
        return np.array([[c, -1j * s], [-1j * s, c]]), gate.qubits, 1.0
    if kind == "RZ":
        return np.diag([np.exp(-1j * gate.angle / 2), np.exp(1j * gate.angle / 2)]), gate.qubits, 1.0
    if kind == "HAD":
        return _HAD, gate.qubits, 1.0
    if kind == "RZZ":
        e = np.exp(1j * gate.angle / 2)
        return np.diag([e.conjugate(), e, e, e.conjugate()]), gate.qubits, 1.0
    if kind == "CZ":
        return _CZ, gate.qubits, 1.0
    if kind == "GPHASE":
        return None, (), np.exp(1j * gate.angle)
    if kind == "APHASE":
        a = circuit.n_ancilla
        if a == 0:
            return None, (), np.exp(1j * gate.angle)
        d = np.full(2**a, np.exp(-1j * gate.angle), dtype=complex)
        d[0] = np.exp(1j * gate.angle)
        return np.diag(d), circuit.ancilla_qubits, 1.0
    if kind == "MCPAULI":
        a = circuit.n_ancilla
        if len(gate.pattern) != a:
            raise ValueError("MCPAULI pattern length must equal the ancilla count")
        if gate.pauli.n != circuit.n_system:
            raise ValueError("MCPAULI Pauli must act on the system register")
        support = gate.pauli.support
        idx = 0
        for b in gate.pattern:
            idx = (idx << 1) | b
        if not support:  # controlled (sign * identity)
            if a == 0:
                return None, (), complex(gate.sign)
            d = np.ones(2**a, dtype=complex)
            d[idx] = gate.sign
            return np.diag(d), circuit.ancilla_qubits, 1.0
        block = PAULI_1Q[gate.pauli.letters[support[0]]]
        for q in support[1:]:
            block = np.kron(block, PAULI_1Q[gate.pauli.letters[q]])
        sdim = 2 ** len(support)
        m = np.eye(2**a * sdim, dtype=complex)
        m[idx * sdim: (idx + 1) * sdim, idx * sdim: (idx + 1) * sdim] = gate.sign * block
        axes = circuit.ancilla_qubits + tuple(circuit.system_qubit(q) for q in support)
        return m, axes, 1.0
    raise ValueError(f"unknown gate kind {kind!r}")


def apply_statevector(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """Noiseless statevector evolution."""
    if state.shape[0] != 2**circuit.width:
        raise ValueError("statevector width does not match circuit")
    out = state.astype(complex)
    for g in circuit.gates:
        local, axes, phase = _gate_local(g, circuit)
        if local is not None:
            out = _tensor_apply(out, local, axes, circuit.width)
        if phase != 1.0:
            out = phase * out
    return out


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary of the whole circuit (desk-scale oracle)."""
    if circuit.width > 12:
        raise DimensionError(f"width {circuit.width} exceeds the dense cap")
    dim = 2**circuit.width
    u = np.eye(dim, dtype=complex)
    for g in circuit.gates:
        local, axes, phase = _gate_local(g, circuit)
        if local is not None:
            u = _tensor_apply(u, local, axes, circuit.width)
        if phase != 1.0:
            u = phase * u
    return u


def _conjugate_density(rho: np.ndarray, local: np.ndarray, axes: tuple[int, ...], width: int) -> np.ndarray:
    rho = _tensor_apply(rho, local, axes, width)
    rho = _tensor_apply(rho.T, local.conj(), axes, width).T
    return rho


def depolarize_pair(rho: np.ndarray, q0: int, q1: int, p: float, width: int) -> np.ndarray:
    """Two-qubit depolarizing channel: keep with 1-p, else I/4 on the pair."""
    if p == 0.0:
        return rho
    rest = [q for q in range(width) if q not in (q0, q1)]
    perm_half = [q0, q1] + rest
    perm = perm_half + [width + q for q in perm_half]
    inv = np.argsort(perm)
    r = 2 ** (width - 2)
    t = rho.reshape([2] * (2 * width)).transpose(perm).reshape(4, r, 4, r)
    traced = np.einsum("aras->rs", t)
    mixed = np.einsum("ab,rs->arbs", np.eye(4, dtype=complex) / 4.0, traced)
    out = (1.0 - p) * t + p * mixed
    return out.reshape([2] * (2 * width)).transpose(inv).reshape(rho.shape)


def global_depolarize(rho: np.ndarray, p: float) -> np.ndarray:
    """(1-p) rho + p I/dim on the full register."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    dim = rho.shape[0]
    return (1.0 - p) * rho + p * np.eye(dim, dtype=complex) / dim


def apply_density(circuit: Circuit, rho: np.ndarray, noise: NoiseModel | None = None) -> np.ndarray:
    """Evolve a density matrix through the circuit under the noise model.

    per_gate_depolarizing attaches a two-qubit depolarizing channel after
    every RZZ and CZ; global_depolarizing applies one channel at the end
    with p = 1-(1-p_tq)^N_TQ; none is exact conjugation.
    """
    if rho.shape[0] != 2**circuit.width:
        raise ValueError("density matrix width does not match circuit")
    noise = noise or NoiseModel()
    noisy = noise.mode != "none" and noise.p_tq > 0.0
    if noisy and any(g.kind in STRUCTURAL_KINDS for g in circuit.gates):
        raise DecompositionRequiredError("noisy simulation needs a decomposed circuit")
    out = rho.astype(complex)
    for g in circuit.gates:
        local, axes, _ = _gate_local(g, circuit)  # scalar phases cancel on rho
        if local is not None:
            out = _conjugate_density(out, local, axes, circuit.width)
        if noisy and noise.mode == "per_gate_depolarizing" and g.kind in ("RZZ", "CZ"):
            out = depolarize_pair(out, g.qubits[0], g.qubits[1], noise.p_tq, circuit.width)
    if noisy and noise.mode == "global_depolarizing":
        n_tq = count_two_qubit_gates(circuit)
        out = global_depolarize(out, 1.0 - (1.0 - noise.p_tq) ** n_tq)
    return out


def count_two_qubit_gates(circuit: Circuit) -> int:
    """Count RZZ and CZ gates; the circuit must be fully decomposed."""
    for g in circuit.gates:
        if g.kind in STRUCTURAL_KINDS:
            raise DecompositionRequiredError(f"{g.kind} must be decomposed before counting")
    return sum(1 for g in circuit.gates if g.kind in ("RZZ", "CZ"))


# ---------------------------------------------------------------------------
# Decomposition of structural gates into the native set
# ---------------------------------------------------------------------------

def _phase1q(q: int, theta: float) -> list[Gate]:
    """diag(1, e^{i theta}) on one qubit."""
    return [gphase(theta / 2.0), rz(q, theta)]


def _cphase(c: int, t: int, theta: float) -> list[Gate]:
    """Controlled phase via one RZZ."""
    return [rz(c, theta / 2.0), rz(t, theta / 2.0), rzz(c, t, -theta / 2.0), gphase(theta / 4.0)]


def _cx(c: int, t: int) -> list[Gate]:
    return [had(t), cz(c, t), had(t)]


def mcphase(controls: tuple[int, ...], target: int, theta: float) -> list[Gate]:
    """Multi-controlled phase (phase theta iff all controls and target are 1).

    Textbook ancilla-free recursion; two-qubit cost satisfies
    cost(m) = 2 + 3*cost(m-1) with cost(1) = 1.
    """
    if not controls:
        return _phase1q(target, theta)
    if len(controls) == 1:
        return _cphase(controls[0], target, theta)
    *rest, last = controls
    gates: list[Gate] = []
    gates += _cphase(last, target, theta / 2.0)
    gates += mcx(tuple(rest), last)
    gates += _cphase(last, target, -theta / 2.0)
    gates += mcx(tuple(rest), last)
    gates += mcphase(tuple(rest), target, theta / 2.0)
    return gates


def mcx(controls: tuple[int, ...], target: int) -> list[Gate]:
    if not controls:
        return [gphase(np.pi / 2.0), rx(target, np.pi)]
    if len(controls) == 1:
        return _cx(controls[0], target)
    return [had(target)] + mcphase(controls, target, np.pi) + [had(target)]


def _pauli_x(q: int) -> list[Gate]:
    return [gphase(np.pi / 2.0), rx(q, np.pi)]


def _decompose_mcpauli(gate: Gate, circuit: Circuit) -> list[Gate]:
    a = circuit.n_ancilla
    ancillas = circuit.ancilla_qubits
    gates: list[Gate] = []
    flips = [ancillas[i] for i, b in enumerate(gate.pattern) if b == 0]
    for q in flips:
        gates += _pauli_x(q)
    support = gate.pauli.support
    sign_pending = gate.sign == -1
    for k, q in enumerate(support):
        letter = gate.pauli.letters[q]
        t = circuit.system_qubit(q)
        pre: list[Gate] = []
        post: list[Gate] = []
        if letter == "X":
            pre, post = [had(t)], [had(t)]
            if sign_pending and k == 0:  # -X = Z X Z
                pre = [gphase(np.pi / 2.0), rz(t, np.pi)] + pre
                post = post + [gphase(np.pi / 2.0), rz(t, np.pi)]
        elif letter == "Y":
            pre, post = [rx(t, np.pi / 2.0)], [rx(t, -np.pi / 2.0)]
            if sign_pending and k == 0:  # -Y = X Y X
                pre = _pauli_x(t) + pre
                post = post + _pauli_x(t)
        elif sign_pending and k == 0:  # -Z = X Z X
            pre = _pauli_x(t)
            post = _pauli_x(t)
        gates += pre + mcphase(ancillas, t, np.pi) + post
        if k == 0:
            sign_pending = False
    if not support and gate.sign == -1:
        if a == 0:
            gates.append(gphase(np.pi))
        elif a == 1:
            gates += _phase1q(ancillas[0], np.pi)
        else:
            gates += mcphase(ancillas[:-1], ancillas[-1], np.pi)
    for q in flips:
        gates += _pauli_x(q)
    return gates


def _decompose_aphase(gate: Gate, circuit: Circuit) -> list[Gate]:
    a = circuit.n_ancilla
    phi = gate.angle
    if a == 0:
        return [gphase(phi)]
    if a == 1:
        return [rz(circuit.ancilla_qubits[0], -2.0 * phi)]
    ancillas = circuit.ancilla_qubits
    gates: list[Gate] = [gphase(-phi)]
    for q in ancillas:
        gates += _pauli_x(q)
    gates += mcphase(ancillas[:-1], ancillas[-1], 2.0 * phi)
    for q in ancillas:
        gates += _pauli_x(q)
    return gates


def decompose(circuit: Circuit) -> Circuit:
    """Expand MCPAULI and APHASE gates into the native gate set."""
    out = Circuit(circuit.n_system, circuit.n_ancilla)
    for g in circuit.gates:
        if g.kind == "MCPAULI":
            out.extend(_decompose_mcpauli(g, circuit))
        elif g.kind == "APHASE":
            out.extend(_decompose_aphase(g, circuit))
        else:
            out.append(g)
    return out


# ---------------------------------------------------------------------------
# States, measurement sampling, serialization
# ---------------------------------------------------------------------------

def zero_state(width: int) -> np.ndarray:
    s = np.zeros(2**width, dtype=complex)
    s[0] = 1.0
    return s


def plus_state(n: int) -> np.ndarray:
    return np.full(2**n, 2.0 ** (-n / 2.0), dtype=complex)


def with_ancilla_zero(psi_system: np.ndarray, n_ancilla: int) -> np.ndarray:
    """|0^a> tensor |psi> in the ancilla-first layout."""
    full = np.zeros(2**n_ancilla * psi_system.shape[0], dtype=complex)
    full[: psi_system.shape[0]] = psi_system
    return full


def density_from_state(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def partial_trace(rho: np.ndarray, keep: tuple[int, ...], width: int) -> np.ndarray:
    """Reduced density matrix on the kept qubits (original index order)."""
    keep = list(keep)
    drop = [q for q in range(width) if q not in keep]
    perm_half = keep + drop
    perm = perm_half + [width + q for q in perm_half]
    k, d = 2 ** len(keep), 2 ** len(drop)
    t = rho.reshape([2] * (2 * width)).transpose(perm).reshape(k, d, k, d)
    return np.einsum("aibi->ab", t)


def sample_pauli_measurement(
    rho: np.ndarray,
    observable: PauliString,
    shots: int,
    seed: int,
    n_ancilla: int,
) -> dict[tuple[str, int], int]:
    """Sample the joint (ancilla bitstring, Pauli eigenvalue) distribution.

    Draws from the exact Born distribution; reproducible under the seed.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    n_system = observable.n
    dim_a, dim_s = 2**n_ancilla, 2**n_system
    if rho.shape[0] != dim_a * dim_s:
        raise ValueError("density matrix width does not match registers")
    pmat = observable.to_matrix()
    probs = np.empty((dim_a, 2))
    for b in range(dim_a):
        block = rho[b * dim_s: (b + 1) * dim_s, b * dim_s: (b + 1) * dim_s]
        tr = np.trace(block).real
        ev = np.trace(pmat @ block).real
        probs[b, 0] = (tr + ev) / 2.0  # outcome +1
        probs[b, 1] = (tr - ev) / 2.0  # outcome -1
    flat = np.clip(probs.reshape(-1), 0.0, None)
    flat = flat / flat.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, flat)
    counts: dict[tuple[str, int], int] = {}
    for idx, c in enumerate(draws):
        if c == 0:
            continue
        b, o = divmod(idx, 2)
        key = (format(b, f"0{n_ancilla}b") if n_ancilla else "", 1 if o == 0 else -1)
        counts[key] = int(c)
    return counts


def to_text(circuit: Circuit) -> str:
    """Line-oriented serialization; floats via repr for bit-exact round-trips."""
    lines = [f"CIRCUIT {circuit.n_system} {circuit.n_ancilla}"]
    for g in circuit.gates:
        if g.kind in ("RX", "RZ"):
            lines.append(f"{g.kind} {g.qubits[0]} {g.angle!r}")
        elif g.kind == "RZZ":
            lines.append(f"RZZ {g.qubits[0]} {g.qubits[1]} {g.angle!r}")
        elif g.kind == "CZ":
            lines.append(f"CZ {g.qubits[0]} {g.qubits[1]}")
        elif g.kind == "HAD":
            lines.append(f"HAD {g.qubits[0]}")
        elif g.kind == "GPHASE":
            lines.append(f"GPHASE {g.angle!r}")
        elif g.kind == "APHASE":
            lines.append(f"APHASE {g.angle!r}")
        else:
            pat = "".join(str(b) for b in g.pattern) or "-"
            lines.append(f"MCPAULI {pat} {g.pauli.letters} {g.sign:+d}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "CIRCUIT":
        raise ValueError("missing CIRCUIT header")
    circuit = Circuit(int(head[1]), int(head[2]))
    for ln in lines[1:]:
        parts = ln.split()
        kind = parts[0]
        if kind in ("RX", "RZ"):
            circuit.append(Gate(kind, (int(parts[1]),), float(parts[2])))
        elif kind == "RZZ":
            circuit.append(rzz(int(parts[1]), int(parts[2]), float(parts[3])))
        elif kind == "CZ":
            circuit.append(cz(int(parts[1]), int(parts[2])))
        elif kind == "HAD":
            circuit.append(had(int(parts[1])))
        elif kind == "GPHASE":
            circuit.append(gphase(float(parts[1])))
        elif kind == "APHASE":
            circuit.append(aphase(float(parts[1])))
        elif kind == "MCPAULI":
            pattern = () if parts[1] == "-" else tuple(int(c) for c in parts[1])
            circuit.append(mcpauli(pattern, PauliString(parts[2]), int(parts[3])))
        else:
            raise ValueError(f"unknown gate line: {ln!r}")
    return circuit
