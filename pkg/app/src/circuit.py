"""
Compile a homogeneous binary tree tensor network into a circuit of qudit gates.

Each qudit holds M lattice sites (dimension D = 2^M, basis index = occupancy bits of
its sites). Canonicalization turns every layer of the tree into one isometry; each
isometry is completed to a two-qudit unitary whose second input (or first, for
right children) starts in |∅⟩ = |0⟩.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from opt_einsum import contract, get_symbol
from scipy.linalg import null_space, qr

from common import (
    ISOMETRY_TOL,
    CircuitShapeError,
    NotHomogeneousError,
    NotIsometricError,
    OracleBoundError,
    PartitionError,
    log,
)
from bethe import LatticePartition, all_choices, full_choice
from networks import TreeTensorNetwork, build_binary_ttn, tree_layers
from oracle import build_dense_bethe, occupancy_index

# Statevector simulation bound, in qubits
MAX_SIMULATED_QUBITS = 20


@dataclass(frozen=True, eq=False)
class CanonicalLayer:
    F: np.ndarray
    W: np.ndarray
    R: np.ndarray


@dataclass(frozen=True, eq=False)
class CanonicalTTN:
    # layers[z] for z = 0 (root) .. Z-1 (just above the leaves)
    layers: Tuple[CanonicalLayer, ...]
    top_vector: np.ndarray
    leaf_rows: int

    @property
    def Z(self):
        return len(self.layers)

    def isometries(self):
        return [layer.W for layer in self.layers]


def _positive_qr(F):
    """Economic QR with a real non-negative diagonal in the triangular factor."""
    Q, R = qr(F, mode="economic")
    diag = np.diag(R)
    phase = np.ones(len(diag), dtype=complex)
    nonzero = np.abs(diag) > 0
    phase[nonzero] = diag[nonzero] / np.abs(diag[nonzero])
    return Q * phase[np.newaxis, :], np.conj(phase)[:, np.newaxis] * R


def canonicalize(net):
    if not isinstance(net, TreeTensorNetwork) or not net.homogeneous or net.leaf_tensor is None:
        raise NotHomogeneousError("canonicalization needs a homogeneous binary TTN")
    M = net.M
    full = tuple(all_choices(M))
    root_index = full.index(full_choice(M))

    child = net.leaf_tensor.matrix()
    leaf_rows = child.shape[0]
    layers = []
    for z in reversed(range(len(net.layer_tensors))):
        T = net.layer_tensors[z].to_array()
        rows = child.shape[0]
        F = contract("ba,gc,xac->bgx", child, child, T).reshape(rows * rows, T.shape[0])
        W, R = _positive_qr(F)
        layers.append(CanonicalLayer(F=F, W=W, R=R))
        child = R
    layers.reverse()

    top = child[:, root_index]
    log(None, f"canonicalized {len(layers)} layers, norm {np.linalg.norm(top):.6g}")
    return CanonicalTTN(layers=tuple(layers), top_vector=top, leaf_rows=leaf_rows)


def canonical_state(canon):
    """Amplitude tensor of the canonical network, one axis per leaf, leaf 1 first."""
    tensor = canon.top_vector
    for z, layer in enumerate(canon.layers):
        rows = canon.leaf_rows if z == canon.Z - 1 else canon.layers[z + 1].R.shape[0]
        W3 = layer.W.reshape(rows, rows, layer.W.shape[1])
        for axis in reversed(range(tensor.ndim)):
            tensor = np.moveaxis(
                np.tensordot(W3, tensor, axes=([2], [axis])), (0, 1), (axis, axis + 1)
            )
    return tensor


def is_isometry(W, tol=ISOMETRY_TOL):
    W = np.atleast_2d(W)
    return np.linalg.norm(W.conj().T @ W - np.eye(W.shape[1])) <= tol


def complete_unitary(W, columns=None):
    """A unitary whose given columns are W and whose other columns span W's complement."""
    W = np.asarray(W, dtype=complex)
    if W.ndim == 1:
        W = W[:, np.newaxis]
    n, k = W.shape
    columns = list(range(k)) if columns is None else list(columns)
    if not is_isometry(W):
        raise NotIsometricError(f"{n}x{k} matrix is not an isometry (W†W != I)")
    complement = null_space(W.conj().T)
    if complement.shape[1] != n - k:
        raise NotIsometricError(f"complement has {complement.shape[1]} columns, expected {n - k}")
    U = np.zeros((n, n), dtype=complex)
    U[:, columns] = W
    taken = set(columns)
    U[:, [c for c in range(n) if c not in taken]] = complement
    return U


def embed_isometry(W, orientation="left"):
    """
    "left": input (α, ∅) maps to W[:, α], so column α·D + 0 holds W[:, α].
    "right": input (∅, α) maps to W[:, α], so column α holds W[:, α].
    """
    W = np.asarray(W, dtype=complex)
    D = W.shape[1]
    if W.shape[0] != D * D:
        raise CircuitShapeError(f"isometry must be D²xD, got {W.shape[0]}x{D}")
    if orientation == "left":
        columns = [alpha * D for alpha in range(D)]
    elif orientation == "right":
        columns = list(range(D))
    else:
        raise CircuitShapeError(f"orientation must be 'left' or 'right', got {orientation!r}")
    return QuditGate(
        kind="two-qudit",
        unitary=complete_unitary(W, columns),
        targets=(0, 1),
        layer=0,
        orientation=orientation,
    )


@dataclass(frozen=True, eq=False)
class QuditGate:
    kind: str
    unitary: np.ndarray
    targets: Tuple[int, ...]
    layer: int
    orientation: Optional[str] = None

    def placed(self, targets, layer):
        return QuditGate(self.kind, self.unitary, tuple(targets), layer, self.orientation)

    def is_unitary(self, tol=ISOMETRY_TOL):
        U = self.unitary
        return np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])) <= tol


@dataclass(frozen=True, eq=False)
class QuantumCircuit:
    num_qudits: int
    D: int
    M: int
    N: int
    gates: List[QuditGate] = field(default_factory=list)

    @property
    def depth(self):
        return len({g.layer for g in self.gates if g.kind == "two-qudit"})

    def two_qudit_count(self):
        return sum(1 for g in self.gates if g.kind == "two-qudit")

    def gates_per_layer(self):
        counts = {}
        for g in self.gates:
            counts[g.layer] = counts.get(g.layer, 0) + 1
        return counts


def compile_circuit(data, N):
    if not data.plane_waves:
        raise NotHomogeneousError("circuit compilation needs plane-wave (standard) Bethe data")
    M = data.M
    if M == 0:
        return QuantumCircuit(num_qudits=0, D=1, M=0, N=N)
    if N % M:
        raise CircuitShapeError(f"N={N} is not a multiple of M={M}")
    L = N // M
    try:
        Z = tree_layers(L)
    except PartitionError:
        raise CircuitShapeError(f"N/M={L} is not a power of two")

    D = 2**M
    net = build_binary_ttn(data, LatticePartition.uniform(N, L), homogeneous=True)
    canon = canonicalize(net)

    top = canon.top_vector / np.linalg.norm(canon.top_vector)
    prep = complete_unitary(top)
    gates = [QuditGate(kind="one-qudit", unitary=prep, targets=(0,), layer=0)]

    # (first qudit, qudit count, which end carries the incoming bond)
    regions = [(0, L, "left")]
    for z in range(Z):
        gate = embed_isometry(canon.layers[z].W, "left")
        flipped = embed_isometry(canon.layers[z].W, "right")
        split = []
        for start, count, side in regions:
            end = start + count - 1
            source = gate if side == "left" else flipped
            gates.append(source.placed((start, end), z + 1))
            half = count // 2
            split += [(start, half, "left"), (start + half, half, "right")]
        regions = split

    log(None, f"compiled circuit: {L} qudits of dimension {D}, depth {Z}, {len(gates)} gates")
    return QuantumCircuit(num_qudits=L, D=D, M=M, N=N, gates=gates)


def simulate_statevector(circuit):
    L, D = circuit.num_qudits, circuit.D
    if circuit.M * L > MAX_SIMULATED_QUBITS:
        raise OracleBoundError(
            f"{circuit.M * L} qubits is above the simulation bound of {MAX_SIMULATED_QUBITS}"
        )
    state = np.zeros((D,) * L, dtype=complex)
    state[(0,) * L] = 1

    axes = [get_symbol(i) for i in range(L)]
    for gate in circuit.gates:
        k = len(gate.targets)
        U = gate.unitary.reshape((D,) * (2 * k))
        outs = [get_symbol(L + i) for i in range(k)]
        ins = [axes[q] for q in gate.targets]
        result = list(axes)
        for q, o in zip(gate.targets, outs):
            result[q] = o
        subscripts = f"{''.join(outs + ins)},{''.join(axes)}->{''.join(result)}"
        state = contract(subscripts, U, state)
    return state.reshape(-1)


def oracle_statevector(state, M):
    """Embed a DenseState into the qudit register: qudit q holds sites qM+1..(q+1)M."""
    if M == 0:
        return np.array(state.amps[:1], dtype=complex)
    L = state.N // M
    D = 2**M
    vec = np.zeros(D**L, dtype=complex)
    qudit_sites = [tuple(range(q * M + 1, (q + 1) * M + 1)) for q in range(L)]
    for row, amp in zip(state.configs.tolist(), state.amps):
        index = 0
        for sites in qudit_sites:
            index = index * D + occupancy_index([x for x in row if x in sites], sites)
        vec[index] += amp
    return vec


def verify_preparation(data, N, circuit=None):
    """|⟨normalized oracle | simulated circuit output⟩|², compiling the circuit unless given"""
    if data.M == 0:
        return 1.0
    if circuit is None:
        circuit = compile_circuit(data, N)
    elif (circuit.M, circuit.N) != (data.M, N):
        raise CircuitShapeError(
            f"circuit prepares M={circuit.M}, N={circuit.N}; expected M={data.M}, N={N}"
        )
    psi = simulate_statevector(circuit)
    target = oracle_statevector(build_dense_bethe(data, N).normalized(), data.M)
    fidelity = float(abs(np.vdot(target, psi)) ** 2)
    log(None, f"preparation fidelity for M={data.M}, N={N}: {fidelity:.12f}")
    return fidelity
