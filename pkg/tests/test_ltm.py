"""Locality transfer matrices: exact paths, sampling, serialization."""

import numpy as np
import pytest

from conftest import haar, random_kraus_channel

from ltmlab import (
    CNOT,
    CircuitUnitary,
    Conjugation,
    Gate,
    LocalityTransferMatrix,
    SubsystemPartition,
    Unitary,
    amplitude_damping,
    cnot_double_cascade,
    crx_cascade,
    cz_cascade,
    depolarizing,
    ltm_exact,
    ltm_sampled,
    mean_ltm_over_ensemble,
    swap_circuit,
)

QUBIT = SubsystemPartition.qubits(1)
TWO_QUBITS = SubsystemPartition.qubits(2)


def test_swap_ltm_is_class_permutation():
    t = ltm_exact(swap_circuit(), TWO_QUBITS)
    want = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    assert np.abs(t.entries - want).max() < 1e-12
    assert t.exact and t.adjoint


def test_cnot_ltm_entries():
    cnot = CircuitUnitary(2, (Gate("cnot", (0, 1), CNOT),))
    t = ltm_exact(cnot, TWO_QUBITS)
    want = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1 / 3, 0.0, 2 / 9],
            [0.0, 0.0, 1 / 3, 2 / 9],
            [0.0, 2 / 3, 2 / 3, 5 / 9],
        ]
    )
    assert np.abs(t.entries - want).max() < 1e-12
    assert np.abs(t.column_sums() - 1.0).max() < 1e-12


def test_amplitude_damping_ltm_closed_form():
    gamma = 0.37
    t = ltm_exact(amplitude_damping(gamma), QUBIT)
    want = np.array(
        [
            [1.0, gamma**2 / 3],
            [0.0, (2 * (1 - gamma) + (1 - gamma) ** 2) / 3],
        ]
    )
    assert np.abs(t.entries - want).max() < 1e-12


def test_unitary_columns_are_stochastic():
    rng = np.random.default_rng(40)
    for ch in (crx_cascade(3, 0.7), cz_cascade(3), Unitary(haar(8, rng))):
        t = ltm_exact(ch, SubsystemPartition.qubits(3))
        assert np.abs(t.column_sums() - 1.0).max() < 1e-10


def test_clifford_path_matches_dense():
    part = SubsystemPartition.qubits(3)
    for circ in (cnot_double_cascade(3), cz_cascade(3)):
        fast = ltm_exact(circ, part)
        # identity rotations force the dense enumeration path
        dense = ltm_exact(circ, part, local_rotations=[np.eye(2)] * 3)
        assert np.abs(fast.entries - dense.entries).max() < 1e-10


def test_clifford_path_handles_grouped_qubits():
    part = SubsystemPartition((4, 2))
    circ = cnot_double_cascade(3)
    grouped = ltm_exact(circ, part)
    dense = ltm_exact(circ, part, local_rotations=[np.eye(4), np.eye(2)])
    assert np.abs(grouped.entries - dense.entries).max() < 1e-10


def test_adjoint_forward_duality():
    rng = np.random.default_rng(41)
    for ch in (random_kraus_channel(4, 3, rng), amplitude_damping(0.3)):
        part = TWO_QUBITS if ch.dim == 4 else QUBIT
        dv = part.block_dims()
        fwd = ltm_exact(ch, part, adjoint=False).entries
        adj = ltm_exact(ch, part, adjoint=True).entries
        # T(adjoint)[k, l] = (d_k / d_l) T(forward)[l, k]
        assert np.abs(adj - dv[:, None] * fwd.T / dv[None, :]).max() < 1e-8


def test_ltm_invariant_under_local_basis_rotation():
    rng = np.random.default_rng(42)
    ch = random_kraus_channel(4, 3, rng)
    plain = ltm_exact(ch, TWO_QUBITS)
    rotated = ltm_exact(
        ch, TWO_QUBITS, local_rotations=[haar(2, rng), haar(2, rng)]
    )
    assert np.abs(plain.entries - rotated.entries).max() < 1e-9


def test_dense_path_refuses_large_dimension():
    with pytest.raises(ValueError, match="refuses dimension"):
        ltm_exact(crx_cascade(8), SubsystemPartition.qubits(8))
    # same size is fine on the Clifford path
    t = ltm_exact(cnot_double_cascade(8), SubsystemPartition.qubits(8))
    assert np.abs(t.column_sums() - 1.0).max() < 1e-10


def test_sampled_ltm_exact_for_swap():
    # every basis element of a class lands in exactly one class, so the
    # stratified mean is exact with zero spread
    t = ltm_sampled(swap_circuit(), TWO_QUBITS, samples_per_block=16, seed=3)
    exact = ltm_exact(swap_circuit(), TWO_QUBITS)
    assert np.abs(t.entries - exact.entries).max() < 1e-12
    assert t.standard_errors.max() < 1e-12
    assert not t.exact
    assert t.samples_per_block == 16


def test_sampled_ltm_deterministic_and_calibrated():
    ch = random_kraus_channel(4, 2, np.random.default_rng(43))
    a = ltm_sampled(ch, TWO_QUBITS, samples_per_block=64, seed=9)
    b = ltm_sampled(ch, TWO_QUBITS, samples_per_block=64, seed=9)
    assert np.array_equal(a.entries, b.entries)
    assert np.array_equal(a.standard_errors, b.standard_errors)
    exact = ltm_exact(ch, TWO_QUBITS)
    gap = np.abs(a.entries - exact.entries)
    assert (gap <= 5 * a.standard_errors + 1e-12).all()


def test_sampled_ltm_needs_two_samples():
    with pytest.raises(ValueError, match="two samples"):
        ltm_sampled(swap_circuit(), TWO_QUBITS, samples_per_block=1, seed=0)


def test_json_round_trip():
    t = ltm_sampled(swap_circuit(), TWO_QUBITS, samples_per_block=4, seed=1)
    back = LocalityTransferMatrix.from_json(t.to_json())
    assert back.partition.dims == t.partition.dims
    assert np.array_equal(back.entries, t.entries)
    assert np.array_equal(back.standard_errors, t.standard_errors)
    assert back.samples_per_block == 4
    assert back.adjoint == t.adjoint and back.exact == t.exact


def test_json_rejects_unknown_order():
    t = ltm_exact(swap_circuit(), TWO_QUBITS)
    tampered = t.to_json().replace("bitmask-ascending", "colex")
    with pytest.raises(ValueError, match="ordering"):
        LocalityTransferMatrix.from_json(tampered)


def test_entry_shape_validation():
    with pytest.raises(ValueError, match="shape"):
        LocalityTransferMatrix(TWO_QUBITS, np.eye(3), adjoint=True, exact=True)
    with pytest.raises(ValueError, match="standard errors"):
        LocalityTransferMatrix(
            TWO_QUBITS, np.eye(4), adjoint=True, exact=True,
            standard_errors=np.zeros((2, 2)),
        )


def test_ensemble_weight_validation():
    u = Unitary(np.eye(4))
    with pytest.raises(ValueError, match="empty"):
        mean_ltm_over_ensemble([], TWO_QUBITS)
    with pytest.raises(ValueError, match="non-negative"):
        mean_ltm_over_ensemble([(-0.5, u), (1.5, u)], TWO_QUBITS)
    with pytest.raises(ValueError, match="sum to"):
        mean_ltm_over_ensemble([(0.4, u), (0.4, u)], TWO_QUBITS)


def test_singleton_ensemble_matches_exact():
    u = Unitary(haar(4, np.random.default_rng(44)))
    mean = mean_ltm_over_ensemble([(1.0, u)], TWO_QUBITS)
    assert np.abs(mean.entries - ltm_exact(u, TWO_QUBITS).entries).max() < 1e-10


def test_unravelling_mean_dominates_channel_ltm():
    rng = np.random.default_rng(45)
    for _ in range(3):
        ch = random_kraus_channel(4, 3, rng)
        norms = np.array([np.sum(np.abs(k) ** 2) for k in ch.operators])
        probs = norms / norms.sum()
        members = [
            (q, Conjugation(k / np.sqrt(q)))
            for q, k in zip(probs, ch.operators)
        ]
        mean = mean_ltm_over_ensemble(members, TWO_QUBITS)
        exact = ltm_exact(ch, TWO_QUBITS)
        assert (mean.entries - exact.entries).min() > -1e-9


def test_depolarizing_ltm_damps_uniformly():
    p = 0.25
    t = ltm_exact(depolarizing(p), QUBIT)
    want = np.array([[1.0, 0.0], [0.0, (1 - p) ** 2]])
    assert np.abs(t.entries - want).max() < 1e-12
