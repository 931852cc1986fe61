import numpy as np
import pytest
from scipy.linalg import qr

from common import CircuitShapeError, NotHomogeneousError, NotIsometricError
from bethe import BetheData, LatticePartition, random_bethe
from circuit import (
    canonical_state,
    canonicalize,
    compile_circuit,
    complete_unitary,
    embed_isometry,
    is_isometry,
    oracle_statevector,
    simulate_statevector,
    verify_preparation,
)
from networks import build_binary_ttn, build_mps
from oracle import build_dense_bethe


def random_isometry(rows, cols, rng):
    A = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    Q, _ = qr(A, mode="economic")
    return Q


def test_circuit_layout(bethe1):
    circuit = compile_circuit(bethe1, 4)
    assert circuit.num_qudits == 4
    assert circuit.D == 2
    assert circuit.depth == 2
    assert circuit.two_qudit_count() == 3
    assert [(g.layer, g.targets) for g in circuit.gates] == [
        (0, (0,)),
        (1, (0, 3)),
        (2, (0, 1)),
        (2, (2, 3)),
    ]
    assert [g.orientation for g in circuit.gates[1:]] == ["left", "left", "right"]
    assert circuit.gates_per_layer() == {0: 1, 1: 1, 2: 2}


def test_gate_distance_halves(bethe2):
    circuit = compile_circuit(bethe2, 16)
    for gate in circuit.gates[1:]:
        first, last = gate.targets
        assert last - first == circuit.num_qudits // 2 ** (gate.layer - 1) - 1


@pytest.mark.parametrize("M, N", [(1, 4), (1, 8), (2, 4), (2, 8)])
def test_gates_are_unitary(M, N, rng):
    circuit = compile_circuit(random_bethe(M, rng), N)
    assert all(g.is_unitary() for g in circuit.gates)
    assert all(g.unitary.shape == (circuit.D ** len(g.targets),) * 2 for g in circuit.gates)


@pytest.mark.parametrize("M, N", [(1, 4), (1, 8), (2, 4), (2, 8)])
def test_preparation_fidelity(M, N, rng):
    assert verify_preparation(random_bethe(M, rng), N) >= 1 - 1e-9


def test_simulated_norm(bethe2):
    psi = simulate_statevector(compile_circuit(bethe2, 8))
    assert np.isclose(np.linalg.norm(psi), 1)
    assert psi.shape == (4**4,)


def test_canonical_state_matches_oracle(bethe2):
    net = build_binary_ttn(bethe2, LatticePartition.uniform(8, 4), homogeneous=True)
    canon = canonicalize(net)
    assert canon.Z == 2
    assert all(is_isometry(W) for W in canon.isometries())
    expected = oracle_statevector(build_dense_bethe(bethe2, 8), 2)
    assert np.allclose(canonical_state(canon).reshape(-1), expected, atol=1e-9)


def test_canonicalize_needs_homogeneous_tree(bethe2):
    with pytest.raises(NotHomogeneousError):
        canonicalize(build_binary_ttn(bethe2, LatticePartition.uniform(8, 4)))
    with pytest.raises(NotHomogeneousError):
        canonicalize(build_mps(bethe2, LatticePartition.uniform(8, 4), homogeneous=True))


@pytest.mark.parametrize("D", [2, 4])
def test_embed_isometry(D, rng):
    W = random_isometry(D * D, D, rng)
    left = embed_isometry(W, "left")
    right = embed_isometry(W, "right")
    for alpha in range(D):
        assert np.allclose(left.unitary[:, alpha * D], W[:, alpha])
        assert np.allclose(right.unitary[:, alpha], W[:, alpha])
    assert left.is_unitary() and right.is_unitary()
    with pytest.raises(CircuitShapeError):
        embed_isometry(W, "middle")
    with pytest.raises(CircuitShapeError):
        embed_isometry(W[:D], "left")


def test_complete_unitary(rng):
    v = random_isometry(4, 1, rng)[:, 0]
    U = complete_unitary(v)
    assert np.allclose(U[:, 0], v)
    assert np.allclose(U.conj().T @ U, np.eye(4))
    with pytest.raises(NotIsometricError):
        complete_unitary(2 * v)


def test_circuit_shape_errors(bethe2, generalized2):
    with pytest.raises(CircuitShapeError):
        compile_circuit(bethe2, 5)
    with pytest.raises(CircuitShapeError):
        compile_circuit(bethe2, 6)
    with pytest.raises(NotHomogeneousError):
        compile_circuit(generalized2, 6)


def test_vacuum_circuit():
    data = BetheData(M=0, k=[], theta={})
    circuit = compile_circuit(data, 4)
    assert circuit.num_qudits == 0
    assert circuit.gates == []
    assert simulate_statevector(circuit).tolist() == [1]
    assert verify_preparation(data, 4) == 1.0
