"""Generators, simulators and amplitude oracles for three circuit families.

* IQP circuits: ``exp(i sum_i theta_i X^{A_i}) |0...0>``, optionally read out
  in the Hadamard basis where the state is ``exp(i sum_i theta_i Z^{A_i}) |+...+>``.
* Random circuits: ``m`` Haar-random two-qubit unitaries on random qubit pairs.
* Supremacy-style circuits: a grid of qubits with cycles of single-qubit
  ``sqrt(X)``, ``sqrt(Y)``, ``sqrt(W)`` gates and fSim entanglers.

Text format (one item per line, ``#`` starts a comment)::

    family iqp            | family random            | family supremacy
    qubits 4              | qubits 4                 | grid 2 2
    rot 0011 1.25         | gate 0 3 re im re im ... | cycles 16
                                                      | sq <cycle> <qubit> sqrt_x
                                                      | fsim <cycle> q1 q2 theta phi

Masks are bitstrings in the package-wide convention (leftmost = highest
qubit); random gates list 16 complex entries row-major as real/imag pairs.
Floats are written with ``repr`` so round trips are exact.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .statevector import (
    MAX_QUBITS,
    StateVector,
    apply_single_qubit,
    apply_two_qubit,
    apply_x_rotation,
    apply_z_rotation,
    is_unitary,
    mask_parity,
)

BASES = ("computational", "hadamard")
BRUTEFORCE_MAX_ROTATIONS = 22


# --------------------------------------------------------------------------
# IQP
# --------------------------------------------------------------------------


@dataclass
class IqpCircuit:
    n: int
    masks: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        self.masks = np.asarray(self.masks, dtype=np.int64).reshape(-1)
        self.angles = np.asarray(self.angles, dtype=np.float64).reshape(-1)
        if self.masks.shape != self.angles.shape:
            raise ValueError("masks and angles must have equal length")
        if self.n < 1:
            raise ValueError("n must be positive")
        if np.any(self.masks < 0) or np.any(self.masks >= (1 << self.n)):
            raise ValueError(f"masks must be {self.n}-bit vectors")

    @property
    def m(self) -> int:
        return self.masks.size

    @property
    def has_zero_mask(self) -> bool:
        """Zero masks only contribute a global phase; allowed but worth knowing."""
        return bool(np.any(self.masks == 0))

    @property
    def rank(self) -> int:
        return gf2_rank(self.masks)

    def with_angles(self, angles) -> IqpCircuit:
        return IqpCircuit(self.n, self.masks.copy(), angles)


def gf2_rank(masks) -> int:
    """Rank over GF(2) of the matrix whose columns are the integer ``masks``."""
    pivots: dict[int, int] = {}
    rank = 0
    for v in (int(a) for a in masks):
        while v:
            top = v.bit_length() - 1
            if top not in pivots:
                pivots[top] = v
                rank += 1
                break
            v ^= pivots[top]
    return rank


def gen_iqp(n: int, m: int, rng: np.random.Generator, mean_weight: float = 2.0) -> IqpCircuit:
    """Random IQP circuit: each mask bit is Bernoulli(mean_weight / n), angles U[0, 2pi)."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    if not 0 < mean_weight <= n:
        raise ValueError(f"mean_weight must lie in (0, {n}]")
    bits = rng.random((m, n)) < mean_weight / n
    masks = bits.astype(np.int64) @ (np.int64(1) << np.arange(n, dtype=np.int64))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=m)
    return IqpCircuit(n, masks, angles)


def iqp_state(circuit: IqpCircuit, basis: str = "computational") -> StateVector:
    if basis not in BASES:
        raise ValueError(f"basis must be one of {BASES}")
    if circuit.n > MAX_QUBITS:
        raise ValueError(f"{circuit.n} qubits exceeds the {MAX_QUBITS}-qubit limit")
    if basis == "computational":
        state = StateVector.zero(circuit.n)
        for a, t in zip(circuit.masks, circuit.angles):
            apply_x_rotation(state, a, t)
        return state
    state = StateVector.plus(circuit.n)
    for a, t in zip(circuit.masks, circuit.angles):
        apply_z_rotation(state, a, t)
    return state


def iqp_hadamard_phases(circuit: IqpCircuit, indices=None) -> np.ndarray:
    """``sum_i theta_i (-1)^(x . A_i)`` for each ``x`` (all ``x`` by default)."""
    if indices is None:
        indices = np.arange(1 << circuit.n, dtype=np.int64)
    return _signed_sum(circuit.masks, circuit.angles, indices)


def _signed_sum(masks, weights, indices) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    total = np.zeros(indices.shape, dtype=np.float64)
    for a, w in zip(masks, weights):
        total += w * (1.0 - 2.0 * mask_parity(indices, a))
    return total


def iqp_amplitude_hadamard(circuit: IqpCircuit, x):
    """``<x|H^n|tau> = 2^{-n/2} exp(i sum_i theta_i (-1)^(x.A_i))`` in O(m) per index."""
    scalar = np.ndim(x) == 0
    idx = np.atleast_1d(np.asarray(x, dtype=np.int64))
    out = 2.0 ** (-circuit.n / 2) * np.exp(1j * iqp_hadamard_phases(circuit, idx))
    return complex(out[0]) if scalar else out


def iqp_amplitudes_bruteforce(circuit: IqpCircuit) -> np.ndarray:
    """All computational amplitudes by summing over every ``v`` in ``{0,1}^m``.

    ``tau_x = sum_{v: Av = x} prod_i beta_i(v_i)`` with ``beta_i(0) = cos theta_i``
    and ``beta_i(1) = i sin theta_i``. Cost is ``O(2^m)``; an oracle for tests.
    """
    if circuit.m > BRUTEFORCE_MAX_ROTATIONS:
        raise ValueError(
            f"brute force over 2^{circuit.m} terms refused (limit m <= {BRUTEFORCE_MAX_ROTATIONS})"
        )
    targets = np.zeros(1, dtype=np.int64)
    weights = np.ones(1, dtype=np.complex128)
    for a, t in zip(circuit.masks, circuit.angles):
        targets = np.concatenate([targets, targets ^ a])
        weights = np.concatenate([weights * np.cos(t), weights * (1j * np.sin(t))])
    d = 1 << circuit.n
    return np.bincount(targets, weights.real, d) + 1j * np.bincount(targets, weights.imag, d)


def iqp_amplitude_computational_bruteforce(circuit: IqpCircuit, x: int) -> complex:
    return complex(iqp_amplitudes_bruteforce(circuit)[x])


# --------------------------------------------------------------------------
# Random two-qubit-unitary circuits
# --------------------------------------------------------------------------


@dataclass
class RandomCircuit:
    n: int
    gates: list = field(default_factory=list)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("random circuits need at least 2 qubits")
        checked = []
        for q1, q2, u in self.gates:
            q1, q2 = int(q1), int(q2)
            u = np.asarray(u, dtype=np.complex128)
            if q1 == q2 or not (0 <= q1 < self.n and 0 <= q2 < self.n):
                raise ValueError(f"bad qubit pair ({q1}, {q2})")
            if u.shape != (4, 4) or not is_unitary(u):
                raise ValueError("gate matrix must be a 4x4 unitary")
            checked.append((q1, q2, u))
        self.gates = checked

    @property
    def m(self) -> int:
        return len(self.gates)


def gram_schmidt(matrix: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormalize the columns of ``matrix`` (modified Gram-Schmidt).

    Raises ``np.linalg.LinAlgError`` if a column is numerically dependent on
    the previous ones.
    """
    q = np.array(matrix, dtype=np.complex128)
    for j in range(q.shape[1]):
        for k in range(j):
            q[:, j] -= np.vdot(q[:, k], q[:, j]) * q[:, k]
        nrm = np.linalg.norm(q[:, j])
        if nrm < tol:
            raise np.linalg.LinAlgError("degenerate column in Gram-Schmidt")
        q[:, j] /= nrm
    return q


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Gram-Schmidt orthonormalized complex Gaussian matrix; redraws on degeneracy."""
    while True:
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        try:
            return gram_schmidt(g)
        except np.linalg.LinAlgError:
            continue


def random_pair(n: int, rng: np.random.Generator) -> tuple[int, int]:
    q1 = int(rng.integers(n))
    q2 = int(rng.integers(n - 1))
    if q2 >= q1:
        q2 += 1
    return q1, q2


def gen_random_circuit(n: int, m: int, rng: np.random.Generator) -> RandomCircuit:
    if n < 2:
        raise ValueError("random circuits need at least 2 qubits")
    gates = []
    for _ in range(m):
        q1, q2 = random_pair(n, rng)
        gates.append((q1, q2, random_unitary(4, rng)))
    return RandomCircuit(n, gates)


def simulate_random(circuit: RandomCircuit) -> StateVector:
    if circuit.n > MAX_QUBITS:
        raise ValueError(f"{circuit.n} qubits exceeds the {MAX_QUBITS}-qubit limit")
    state = StateVector.zero(circuit.n)
    for q1, q2, u in circuit.gates:
        apply_two_qubit(state, q1, q2, u)
    return state


# --------------------------------------------------------------------------
# Supremacy-style grid circuits
# --------------------------------------------------------------------------

SUPREMACY_SIZES = {4: (2, 2), 9: (3, 3), 12: (3, 4), 16: (4, 4), 20: (4, 5)}
FSIM_THETA = np.pi / 2
FSIM_PHI = np.pi / 6
PATTERN_SEQUENCE = "ABCDCDAB"

_W = (np.array([[0, 1], [1, 0]]) + np.array([[0, -1j], [1j, 0]])) / np.sqrt(2)


def _half_turn(pauli: np.ndarray) -> np.ndarray:
    # exp(-i pi/4 P) for an involutory Pauli-like P
    return (np.eye(2) - 1j * pauli) / np.sqrt(2)


SINGLE_QUBIT_GATES = {
    "sqrt_x": _half_turn(np.array([[0, 1], [1, 0]], dtype=complex)),
    "sqrt_y": _half_turn(np.array([[0, -1j], [1j, 0]], dtype=complex)),
    "sqrt_w": _half_turn(_W),
}
GATE_NAMES = tuple(SINGLE_QUBIT_GATES)


def fsim(theta: float, phi: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array(
        [[1, 0, 0, 0], [0, c, -1j * s, 0], [0, -1j * s, c, 0], [0, 0, 0, np.exp(-1j * phi)]],
        dtype=complex,
    )


def grid_couplers(rows: int, cols: int) -> dict[str, list[tuple[int, int]]]:
    """Split nearest-neighbour couplers into four disjoint matchings A-D.

    Qubit ``(r, c)`` has index ``r * cols + c``. A/B are horizontal couplers
    whose left end has even/odd ``r + c``; C/D are vertical ones split the
    same way by the upper end.
    """
    patterns: dict[str, list[tuple[int, int]]] = {k: [] for k in "ABCD"}
    for r in range(rows):
        for c in range(cols):
            q = r * cols + c
            if c + 1 < cols:
                patterns["A" if (r + c) % 2 == 0 else "B"].append((q, q + 1))
            if r + 1 < rows:
                patterns["C" if (r + c) % 2 == 0 else "D"].append((q, q + cols))
    return patterns


@dataclass
class SupremacyCircuit:
    """Grid circuit; cycle ``k`` applies ``single_qubit[k]`` then ``couplers[k]``.

    ``single_qubit`` is a ``(cycles, n)`` array of indices into ``GATE_NAMES``;
    ``couplers[k]`` lists ``(q1, q2)`` pairs and ``entangler_angles[k]`` the
    matching ``(theta, phi)`` rows.
    """

    rows: int
    cols: int
    single_qubit: np.ndarray
    couplers: list
    entangler_angles: list

    def __post_init__(self):
        self.single_qubit = np.asarray(self.single_qubit, dtype=np.int64).reshape(-1, self.n)
        if len(self.couplers) != self.cycles or len(self.entangler_angles) != self.cycles:
            raise ValueError("one coupler list and one angle list per cycle required")
        self.entangler_angles = [np.asarray(a, dtype=np.float64).reshape(-1, 2) for a in self.entangler_angles]
        for pairs, ang in zip(self.couplers, self.entangler_angles):
            if len(pairs) != len(ang):
                raise ValueError("each coupler needs one (theta, phi) pair")
            for q1, q2 in pairs:
                if q1 == q2:
                    raise ValueError("coupler endpoints must differ")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @property
    def cycles(self) -> int:
        return self.single_qubit.shape[0]


def gen_supremacy_circuit(n: int, cycles: int, rng: np.random.Generator) -> SupremacyCircuit:
    """Single-qubit gates uniform over the three half-turns, never repeating on a qubit."""
    if n not in SUPREMACY_SIZES:
        raise ValueError(f"supported sizes are {sorted(SUPREMACY_SIZES)}")
    if cycles < 0:
        raise ValueError("cycles must be nonnegative")
    rows, cols = SUPREMACY_SIZES[n]
    patterns = grid_couplers(rows, cols)
    choice = np.zeros((cycles, n), dtype=np.int64)
    for k in range(cycles):
        if k == 0:
            choice[k] = rng.integers(3, size=n)
        else:
            # pick one of the two gates that differ from the previous cycle
            choice[k] = (choice[k - 1] + 1 + rng.integers(2, size=n)) % 3
    couplers = []
    angles = []
    for k in range(cycles):
        pairs = list(patterns[PATTERN_SEQUENCE[k % len(PATTERN_SEQUENCE)]])
        couplers.append(pairs)
        angles.append(np.tile([FSIM_THETA, FSIM_PHI], (len(pairs), 1)))
    return SupremacyCircuit(rows, cols, choice, couplers, angles)


def simulate_supremacy(
    circuit: SupremacyCircuit,
    single_qubit_errors: np.ndarray | None = None,
    entangler_angles: list | None = None,
) -> StateVector:
    """Statevector of the circuit.

    ``single_qubit_errors`` optionally holds a ``(cycles, n, 2, 2)`` array of
    unitaries applied right after each single-qubit gate;
    ``entangler_angles`` optionally replaces the circuit's fSim angles.
    """
    angles = circuit.entangler_angles if entangler_angles is None else entangler_angles
    state = StateVector.zero(circuit.n)
    gates = [SINGLE_QUBIT_GATES[name] for name in GATE_NAMES]
    for k in range(circuit.cycles):
        for q in range(circuit.n):
            apply_single_qubit(state, q, gates[circuit.single_qubit[k, q]])
            if single_qubit_errors is not None:
                apply_single_qubit(state, q, single_qubit_errors[k, q])
        for (q1, q2), (theta, phi) in zip(circuit.couplers[k], angles[k]):
            apply_two_qubit(state, q1, q2, fsim(theta, phi))
    return state


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _bits(value: int, n: int) -> str:
    return format(int(value), f"0{n}b")


def dumps_circuit(circuit) -> str:
    out = io.StringIO()
    if isinstance(circuit, IqpCircuit):
        out.write(f"family iqp\nqubits {circuit.n}\n")
        for a, t in zip(circuit.masks, circuit.angles):
            out.write(f"rot {_bits(a, circuit.n)} {float(t)!r}\n")
    elif isinstance(circuit, RandomCircuit):
        out.write(f"family random\nqubits {circuit.n}\n")
        for q1, q2, u in circuit.gates:
            nums = " ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in u.reshape(-1))
            out.write(f"gate {q1} {q2} {nums}\n")
    elif isinstance(circuit, SupremacyCircuit):
        out.write(f"family supremacy\ngrid {circuit.rows} {circuit.cols}\ncycles {circuit.cycles}\n")
        for k in range(circuit.cycles):
            for q in range(circuit.n):
                out.write(f"sq {k} {q} {GATE_NAMES[circuit.single_qubit[k, q]]}\n")
            for (q1, q2), (t, p) in zip(circuit.couplers[k], circuit.entangler_angles[k]):
                out.write(f"fsim {k} {q1} {q2} {float(t)!r} {float(p)!r}\n")
    else:
        raise TypeError(f"cannot serialize {type(circuit).__name__}")
    return out.getvalue()


def loads_circuit(text: str):
    """Parse the text format; any malformed input raises ``ValueError``."""
    try:
        return _parse_circuit(text)
    except (IndexError, KeyError) as exc:
        raise ValueError(f"malformed circuit text: {exc}") from exc


def _parse_mask(token: str, n: int) -> int:
    if len(token) != n or set(token) - {"0", "1"}:
        raise ValueError(f"mask {token!r} is not a {n}-bit string")
    return int(token, 2)


def _parse_circuit(text: str):
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.split())
    if not lines or lines[0][0] != "family":
        raise ValueError("circuit text must start with a 'family' line")
    family = lines[0][1]
    body = lines[1:]
    if family == "iqp":
        n = int(_expect(body, "qubits")[0])
        rots = [(_parse_mask(t[1], n), float(t[2])) for t in body if t[0] == "rot"]
        masks = [r[0] for r in rots]
        angles = [r[1] for r in rots]
        return IqpCircuit(n, masks, angles)
    if family == "random":
        n = int(_expect(body, "qubits")[0])
        gates = []
        for t in body:
            if t[0] != "gate":
                continue
            vals = np.array([float(v) for v in t[3:]])
            if vals.size != 32:
                raise ValueError("gate line needs 16 complex entries")
            gates.append((int(t[1]), int(t[2]), (vals[0::2] + 1j * vals[1::2]).reshape(4, 4)))
        return RandomCircuit(n, gates)
    if family == "supremacy":
        rows, cols = (int(v) for v in _expect(body, "grid"))
        cycles = int(_expect(body, "cycles")[0])
        n = rows * cols
        choice = np.zeros((cycles, n), dtype=np.int64)
        couplers = [[] for _ in range(cycles)]
        angles = [[] for _ in range(cycles)]
        for t in body:
            if t[0] == "sq":
                choice[int(t[1]), int(t[2])] = GATE_NAMES.index(t[3])
            elif t[0] == "fsim":
                k = int(t[1])
                couplers[k].append((int(t[2]), int(t[3])))
                angles[k].append((float(t[4]), float(t[5])))
        return SupremacyCircuit(rows, cols, choice, couplers, angles)
    raise ValueError(f"unknown circuit family {family!r}")


def _expect(body, key):
    for t in body:
        if t[0] == key:
            return t[1:]
    raise ValueError(f"missing '{key}' line")


def save_circuit(circuit, path) -> None:
    Path(path).write_text(dumps_circuit(circuit), encoding="utf-8")


def load_circuit(path):
    return loads_circuit(Path(path).read_text(encoding="utf-8"))


def circuit_state(circuit, basis: str = "computational") -> StateVector:
    """Ideal output state of any supported circuit."""
    if isinstance(circuit, IqpCircuit):
        return iqp_state(circuit, basis)
    if basis != "computational":
        raise ValueError("only IQP circuits support the Hadamard readout basis")
    if isinstance(circuit, RandomCircuit):
        return simulate_random(circuit)
    if isinstance(circuit, SupremacyCircuit):
        return simulate_supremacy(circuit)
    raise TypeError(f"unsupported circuit type {type(circuit).__name__}")
