import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from evaqs.circuits import (
    SUPREMACY_SIZES,
    IqpCircuit,
    RandomCircuit,
    SupremacyCircuit,
    circuit_state,
    dumps_circuit,
    fsim,
    gen_iqp,
    gen_random_circuit,
    gen_supremacy_circuit,
    gf2_rank,
    gram_schmidt,
    grid_couplers,
    iqp_amplitude_computational_bruteforce,
    iqp_amplitude_hadamard,
    iqp_amplitudes_bruteforce,
    iqp_state,
    load_circuit,
    loads_circuit,
    random_unitary,
    save_circuit,
    simulate_random,
    simulate_supremacy,
)
from evaqs.cost import collision_probability
from evaqs.statevector import I2, X, apply_hadamard_all, is_unitary

from oracles import dense_pauli_string, dense_two


def dense_iqp(circuit: IqpCircuit) -> np.ndarray:
    gen = sum(t * dense_pauli_string(circuit.n, int(a), X) for a, t in zip(circuit.masks, circuit.angles))
    zero = np.zeros(1 << circuit.n, dtype=complex)
    zero[0] = 1
    return expm(1j * gen) @ zero


# -- IQP ------------------------------------------------------------------


def test_gen_iqp_full_weight_gives_all_ones_masks():
    c = gen_iqp(5, 40, np.random.default_rng(0), mean_weight=5)
    assert np.all(c.masks == 0b11111)


def test_gen_iqp_mean_popcount():
    n, m = 10, 10_000
    c = gen_iqp(n, m, np.random.default_rng(1), mean_weight=2.0)
    weights = np.bitwise_count(c.masks)
    sd = np.sqrt(n * 0.2 * 0.8 / m)
    assert abs(weights.mean() - 2.0) < 5 * sd
    assert np.all((c.angles >= 0) & (c.angles < 2 * np.pi))


def test_gen_iqp_is_deterministic():
    a = gen_iqp(6, 18, np.random.default_rng(7))
    b = gen_iqp(6, 18, np.random.default_rng(7))
    assert np.array_equal(a.masks, b.masks) and np.array_equal(a.angles, b.angles)


@pytest.mark.parametrize("mean_weight", [0, -1, 7])
def test_gen_iqp_rejects_bad_mean_weight(mean_weight):
    with pytest.raises(ValueError):
        gen_iqp(6, 3, np.random.default_rng(0), mean_weight=mean_weight)


def test_zero_mask_is_flagged():
    assert IqpCircuit(2, [0, 1], [0.1, 0.2]).has_zero_mask
    assert not IqpCircuit(2, [2, 1], [0.1, 0.2]).has_zero_mask


def test_gf2_rank():
    assert gf2_rank([0b011, 0b110, 0b101]) == 2
    assert gf2_rank([0b001, 0b010, 0b100]) == 3
    assert gf2_rank([0]) == 0


def test_iqp_single_rotation():
    theta = 0.8
    s = iqp_state(IqpCircuit(2, [0b10], [theta]))
    assert np.allclose(s.amplitudes, [np.cos(theta), 0, 1j * np.sin(theta), 0], atol=1e-15)


def test_iqp_hadamard_basis_is_flat():
    c = gen_iqp(6, 18, np.random.default_rng(2))
    amps = iqp_state(c, "hadamard").amplitudes
    assert np.max(np.abs(np.abs(amps) - 2**-3)) < 1e-14


def test_iqp_matches_expm_oracle():
    c = gen_iqp(3, 9, np.random.default_rng(3))
    assert np.max(np.abs(iqp_state(c).amplitudes - dense_iqp(c))) < 1e-10


@pytest.mark.parametrize("n", [1, 3, 6])
def test_iqp_hadamard_consistency(n):
    c = gen_iqp(n, 3 * n, np.random.default_rng(n), mean_weight=min(2.0, n))
    rotated = apply_hadamard_all(iqp_state(c, "computational"))
    assert np.max(np.abs(rotated.amplitudes - iqp_state(c, "hadamard").amplitudes)) < 1e-10


def test_hadamard_amplitude_formula_examples():
    n = 3
    c = IqpCircuit(n, [0b011, 0b110], [0.0, 0.0])
    assert np.allclose(iqp_amplitude_hadamard(c, np.arange(8)), 2 ** (-n / 2), atol=1e-15)
    theta = 0.6
    single = IqpCircuit(n, [0b001], [theta])
    for x in range(8):
        expected = 2 ** (-n / 2) * np.exp(1j * theta * (-1) ** (x & 1))
        assert abs(iqp_amplitude_hadamard(single, x) - expected) < 1e-15


@pytest.mark.parametrize("n", [4, 6])
def test_hadamard_amplitude_matches_statevector(n):
    c = gen_iqp(n, 3 * n, np.random.default_rng(20 + n))
    ref = iqp_state(c, "hadamard").amplitudes
    got = iqp_amplitude_hadamard(c, np.arange(1 << n))
    assert np.max(np.abs(got - ref)) < 1e-12


def test_computational_bruteforce_examples():
    theta = 1.1
    c = IqpCircuit(2, [0b10], [theta])
    assert abs(iqp_amplitude_computational_bruteforce(c, 0b00) - np.cos(theta)) < 1e-15
    assert abs(iqp_amplitude_computational_bruteforce(c, 0b10) - 1j * np.sin(theta)) < 1e-15
    assert iqp_amplitude_computational_bruteforce(c, 0b01) == 0


@pytest.mark.parametrize("n,m", [(3, 6), (4, 12)])
def test_computational_bruteforce_matches_statevector(n, m):
    c = gen_iqp(n, m, np.random.default_rng(n * m))
    ref = iqp_state(c).amplitudes
    assert np.max(np.abs(iqp_amplitudes_bruteforce(c) - ref)) < 1e-10
    for x in range(1 << n):
        assert abs(iqp_amplitude_computational_bruteforce(c, x) - ref[x]) < 1e-10


def test_bruteforce_refuses_large_m():
    c = gen_iqp(4, 30, np.random.default_rng(0))
    with pytest.raises(ValueError):
        iqp_amplitudes_bruteforce(c)


def test_iqp_state_size_limit():
    with pytest.raises(ValueError):
        iqp_state(IqpCircuit(25, [1], [0.1]))


# -- random circuits ----------------------------------------------------------


def test_random_circuit_gates_are_unitary_on_distinct_pairs():
    c = gen_random_circuit(6, 18, np.random.default_rng(4))
    assert c.m == 18
    for q1, q2, u in c.gates:
        assert q1 != q2 and 0 <= q1 < 6 and 0 <= q2 < 6
        assert np.max(np.abs(u.conj().T @ u - np.eye(4))) < 1e-10


def test_random_circuit_is_deterministic():
    a = gen_random_circuit(5, 15, np.random.default_rng(9))
    b = gen_random_circuit(5, 15, np.random.default_rng(9))
    assert dumps_circuit(a) == dumps_circuit(b)


def test_random_circuit_needs_two_qubits():
    with pytest.raises(ValueError):
        gen_random_circuit(1, 3, np.random.default_rng(0))


def test_random_unitary_fuzz():
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        assert is_unitary(random_unitary(4, rng))


def test_gram_schmidt_rejects_degenerate_columns():
    m = np.ones((4, 4), dtype=complex)
    with pytest.raises(np.linalg.LinAlgError):
        gram_schmidt(m)


def test_gram_schmidt_spans_same_flag():
    # Q R = M with R upper triangular
    rng = np.random.default_rng(6)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    q = gram_schmidt(m)
    r = q.conj().T @ m
    assert np.allclose(np.tril(r, -1), 0, atol=1e-12)


def test_simulate_random_matches_dense_product():
    n = 4
    c = gen_random_circuit(n, 8, np.random.default_rng(7))
    dense = np.eye(1 << n, dtype=complex)
    for q1, q2, u in c.gates:
        dense = dense_two(n, q1, q2, u) @ dense
    assert np.max(np.abs(simulate_random(c).amplitudes - dense[:, 0])) < 1e-12


def test_random_circuit_rejects_bad_gate():
    with pytest.raises(ValueError):
        RandomCircuit(3, [(0, 0, np.eye(4))])


# -- supremacy circuits ------------------------------------------------------------


def test_fsim_is_unitary_and_has_expected_form():
    u = fsim(np.pi / 2, np.pi / 6)
    assert is_unitary(u)
    assert np.isclose(u[0, 0], 1) and np.isclose(u[3, 3], np.exp(-1j * np.pi / 6))
    assert np.isclose(u[1, 2], -1j)


@pytest.mark.parametrize("n", sorted(SUPREMACY_SIZES))
def test_grid_couplers_cover_every_edge_once(n):
    rows, cols = SUPREMACY_SIZES[n]
    assert abs(rows - cols) <= 1
    patterns = grid_couplers(rows, cols)
    edges = [tuple(sorted(p)) for pairs in patterns.values() for p in pairs]
    assert len(edges) == len(set(edges)) == rows * (cols - 1) + cols * (rows - 1)
    for pairs in patterns.values():
        used = [q for p in pairs for q in p]
        assert len(used) == len(set(used))


def test_supremacy_zero_cycles_is_ground_state():
    c = gen_supremacy_circuit(4, 0, np.random.default_rng(0))
    amps = simulate_supremacy(c).amplitudes
    assert amps[0] == 1 and np.count_nonzero(amps) == 1


def test_supremacy_gates_never_repeat_on_a_qubit():
    c = gen_supremacy_circuit(9, 16, np.random.default_rng(1))
    assert np.all(c.single_qubit[1:] != c.single_qubit[:-1])


@pytest.mark.parametrize("n", [4, 9, 12, 16])
def test_supremacy_output_is_normalized(n):
    c = gen_supremacy_circuit(n, 16, np.random.default_rng(n))
    assert abs(simulate_supremacy(c).norm_squared() - 1) < 1e-10


@pytest.mark.slow
def test_supremacy_output_is_normalized_twenty_qubits():
    c = gen_supremacy_circuit(20, 16, np.random.default_rng(20))
    assert abs(simulate_supremacy(c).norm_squared() - 1) < 1e-10


def test_supremacy_collision_probability_near_porter_thomas():
    d = 16
    pcs = []
    for seed in range(20):
        c = gen_supremacy_circuit(4, 16, np.random.default_rng(seed))
        pc = collision_probability(simulate_supremacy(c).probabilities())
        assert 1 / d < pc < 1
        pcs.append(pc)
    assert 2 / d / 3 <= np.median(pcs) <= 3 * 2 / d


def test_supremacy_rejects_unsupported_size():
    with pytest.raises(ValueError):
        gen_supremacy_circuit(5, 16, np.random.default_rng(0))


# -- serialization ----------------------------------------------------------------


def _circuits():
    rng = np.random.default_rng(11)
    return [gen_iqp(5, 15, rng), gen_random_circuit(4, 6, rng), gen_supremacy_circuit(4, 5, rng)]


@pytest.mark.parametrize("circuit", _circuits(), ids=["iqp", "random", "supremacy"])
def test_serialization_round_trip_is_exact(circuit, tmp_path):
    text = dumps_circuit(circuit)
    back = loads_circuit(text)
    assert dumps_circuit(back) == text
    assert np.array_equal(circuit_state(back).amplitudes, circuit_state(circuit).amplitudes)
    path = tmp_path / "c.txt"
    save_circuit(circuit, path)
    assert dumps_circuit(load_circuit(path)) == text


def test_serialized_iqp_uses_bitstring_masks():
    text = dumps_circuit(IqpCircuit(3, [0b001], [0.5]))
    assert "rot 001 0.5" in text


@pytest.mark.parametrize(
    "text",
    ["", "family nope\n", "family iqp\nqubits 2\nrot 011 0.1\n", "family random\nqubits 2\ngate 0 1 1 0\n"],
)
def test_loads_rejects_malformed_text(text):
    with pytest.raises(ValueError):
        loads_circuit(text)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), m=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_iqp_text_round_trip_property(n, m, seed):
    c = gen_iqp(n, m, np.random.default_rng(seed), mean_weight=min(2.0, n))
    back = loads_circuit(dumps_circuit(c))
    assert np.array_equal(back.masks, c.masks) and np.array_equal(back.angles, c.angles)


def test_circuit_state_dispatch():
    rng = np.random.default_rng(12)
    iqp = gen_iqp(3, 4, rng)
    assert np.array_equal(circuit_state(iqp, "hadamard").amplitudes, iqp_state(iqp, "hadamard").amplitudes)
    rc = gen_random_circuit(3, 3, rng)
    assert np.array_equal(circuit_state(rc).amplitudes, simulate_random(rc).amplitudes)
    sc = SupremacyCircuit(1, 2, np.zeros((0, 2)), [], [])
    assert circuit_state(sc).amplitudes[0] == 1
    assert I2.shape == (2, 2)
