import itertools
from dataclasses import dataclass, field
from typing import List

import numpy as np

from common import DimensionMismatchError, NotHomogeneousError
from bethe import EMPTY, all_choices, full_choice, size
from networks import MatrixProductState, TreeTensorNetwork, contract_to_dense
from oracle import DenseState, inner_product


@dataclass
class ContractionStats:
    """Sparse multiply counts, one entry per MPS site (or per tree merge); dense
    matrix products on the transfer path."""

    ket_multiplies: List[int] = field(default_factory=list)
    bra_multiplies: List[int] = field(default_factory=list)
    merges: int = 0
    off_sector: int = 0
    matrix_products: int = 0

    @property
    def total(self):
        return sum(self.ket_multiplies) + sum(self.bra_multiplies)


def _same_layout(bra, ket):
    if bra.partition.parts != ket.partition.parts:
        raise DimensionMismatchError(
            f"bra and ket use different partitions: {bra.partition.parts} vs {ket.partition.parts}"
        )


def _by_left(tensor):
    out = {}
    for (mu_l, mu_r, bits), value in tensor.entries.items():
        out.setdefault(mu_l, []).append((mu_r, bits, value))
    return out


def _by_left_and_bits(tensor):
    out = {}
    for (mu_l, mu_r, bits), value in tensor.entries.items():
        out.setdefault((mu_l, bits), []).append((mu_r, value))
    return out


# Environments are keyed by (ket choice, bra choice) of equal particle number
def _mps_step(rho, ket_tensor, bra_tensor, stats=None):
    ket_rows = _by_left(ket_tensor)
    bra_rows = _by_left_and_bits(bra_tensor)

    # Half step through the ket tensor: X[(ν, σ)][μ'] = Σ_μ ρ[μ, ν] A_σ[μ, μ']
    half = {}
    count = 0
    for (mu, nu), r in rho.items():
        for mu_r, bits, a in ket_rows.get(mu, ()):
            row = half.setdefault((nu, bits), {})
            row[mu_r] = row.get(mu_r, 0) + r * a
            count += 1
    if stats is not None:
        stats.ket_multiplies.append(count)

    # Half step through the bra tensor: ρ'[μ', ν'] = Σ_{ν,σ} X[(ν, σ)][μ'] conj(B_σ[ν, ν'])
    out = {}
    count = 0
    for (nu, bits), row in half.items():
        for nu_r, b in bra_rows.get((nu, bits), ()):
            b = np.conj(b)
            for mu_r, x in row.items():
                out[(mu_r, nu_r)] = out.get((mu_r, nu_r), 0) + x * b
                count += 1
    if stats is not None:
        stats.bra_multiplies.append(count)
        stats.off_sector += sum(1 for mu, nu in out if size(mu) != size(nu))
    return out


def mps_overlap(bra, ket, stats=None):
    if not isinstance(bra, MatrixProductState) or not isinstance(ket, MatrixProductState):
        raise DimensionMismatchError("mps_overlap needs two matrix product states")
    _same_layout(bra, ket)
    if bra.M != ket.M:
        return 0j

    top = full_choice(ket.M)
    rho = {(top, top): 1}
    for bra_tensor, ket_tensor in zip(bra.pinned_tensors(), ket.pinned_tensors()):
        rho = _mps_step(rho, ket_tensor, bra_tensor, stats)
    return complex(rho.get((EMPTY, EMPTY), 0))


def _leaf_environment(ket_tensor, bra_tensor):
    bra_by_bits = {}
    for (a, bits), value in bra_tensor.entries.items():
        bra_by_bits.setdefault(bits, []).append((a, value))
    env = {}
    for (a, bits), value in ket_tensor.entries.items():
        row = env.setdefault(a, {})
        for b, bv in bra_by_bits.get(bits, ()):
            row[b] = row.get(b, 0) + value * np.conj(bv)
    return env


def _merge(ket_tensor, bra_tensor, child_envs, stats=None):
    """ρ[μ, ν] = Σ A[μ; ν1..νq] conj(B[ν; ν'1..ν'q]) Π ρ_l[ν_l, ν'_l]"""
    bra_by_children = {idx[1:]: (idx[0], value) for idx, value in bra_tensor.entries.items()}
    env = {}
    for idx, a in ket_tensor.entries.items():
        mu, kids = idx[0], idx[1:]
        rows = [child.get(kid) for child, kid in zip(child_envs, kids)]
        if any(row is None for row in rows):
            continue
        for picks in itertools.product(*(row.items() for row in rows)):
            hit = bra_by_children.get(tuple(b for b, _ in picks))
            if hit is None:
                continue
            nu, bv = hit
            value = a * np.conj(bv)
            for _, r in picks:
                value *= r
            row = env.setdefault(mu, {})
            row[nu] = row.get(nu, 0) + value
    if stats is not None:
        stats.merges += 1
        stats.off_sector += sum(
            1 for mu, row in env.items() for nu in row if size(mu) != size(nu)
        )
    return env


def ttn_overlap(bra, ket, stats=None):
    if not isinstance(bra, TreeTensorNetwork) or not isinstance(ket, TreeTensorNetwork):
        raise DimensionMismatchError("ttn_overlap needs two tree tensor networks")
    _same_layout(bra, ket)
    if bra.tree.to_nested() != ket.tree.to_nested():
        raise DimensionMismatchError("bra and ket trees have different shapes")
    if bra.M != ket.M:
        return 0j

    tree = ket.tree

    def environment(path):
        node = tree.node(path)
        if isinstance(node, int):
            return _leaf_environment(ket.leaf_tensors[node - 1], bra.leaf_tensors[node - 1])
        children = [environment(path + (i,)) for i in range(len(node))]
        return _merge(ket.node_tensors[path], bra.node_tensors[path], children, stats)

    top = full_choice(ket.M)
    return complex(environment(()).get(top, {}).get(top, 0))


def homogeneous_ttn_overlap(bra, ket, stats=None):
    for net in (bra, ket):
        if not isinstance(net, TreeTensorNetwork) or not net.homogeneous:
            raise NotHomogeneousError("homogeneous_ttn_overlap needs homogeneous binary TTNs")
    if len(bra.layer_tensors) != len(ket.layer_tensors):
        raise DimensionMismatchError(
            f"tree depths differ: {len(bra.layer_tensors)} vs {len(ket.layer_tensors)}"
        )
    _same_layout(bra, ket)
    if bra.M != ket.M:
        return 0j

    # Every node of a layer sees the same children, so one merge per layer suffices
    env = _leaf_environment(ket.leaf_tensor, bra.leaf_tensor)
    for z in reversed(range(len(ket.layer_tensors))):
        env = _merge(ket.layer_tensors[z], bra.layer_tensors[z], [env, env], stats)

    top = full_choice(ket.M)
    return complex(env.get(top, {}).get(top, 0))


def transfer_matrix(bra_tensor, ket_tensor, M):
    """
    E[(μ,ν), (μ',ν')] = Σ_σ A_σ[μ,μ'] conj(B_σ[ν,ν']) over same-sector pairs, with the
    pair basis ordered by sector.
    """
    pairs = [
        (mu, nu)
        for m in range(M + 1)
        for mu in all_choices(M, m, m)
        for nu in all_choices(M, m, m)
    ]
    index = {pair: i for i, pair in enumerate(pairs)}
    E = np.zeros((len(pairs), len(pairs)), dtype=complex)
    bra_rows = _by_left_and_bits(bra_tensor)
    for (mu, mu_r, bits), a in ket_tensor.entries.items():
        for nu in all_choices(M, size(mu), size(mu)):
            for nu_r, b in bra_rows.get((nu, bits), ()):
                E[index[(mu, nu)], index[(mu_r, nu_r)]] += a * np.conj(b)
    return E, index


def _matrix_power(E, n, stats=None):
    # Repeated squaring, counting every matrix product
    result = np.eye(E.shape[0], dtype=E.dtype)
    base = E
    products = 0
    while n:
        if n & 1:
            result = result @ base
            products += 1
        n >>= 1
        if n:
            base = base @ base
            products += 1
    if stats is not None:
        stats.matrix_products += products
    return result


def homogeneous_mps_overlap(bra, ket, N=None, stats=None):
    """
    Overlap of two homogeneous MPS through powers of their transfer matrix. With N
    given, both states are evaluated on N sites regardless of the lengths they were
    built for.
    """
    for net in (bra, ket):
        if not isinstance(net, MatrixProductState) or not net.homogeneous:
            raise NotHomogeneousError("the transfer matrix path needs homogeneous MPS")
    p = ket.partition.parts[0]
    if N is None:
        _same_layout(bra, ket)
        N = ket.N
    elif bra.partition.parts[0] != p:
        raise DimensionMismatchError("bra and ket use different part sizes")
    if bra.M != ket.M:
        return 0j
    if N % p:
        raise DimensionMismatchError(f"N={N} is not a multiple of the part size {p}")
    M = ket.M
    if M > N:
        return 0j

    E, index = transfer_matrix(bra.tensors[0], ket.tensors[0], M)
    power = _matrix_power(E, N // p, stats)
    top = full_choice(M)
    return complex(power[index[(top, top)], index[(EMPTY, EMPTY)]])


def _as_dense(state):
    return state if isinstance(state, DenseState) else contract_to_dense(state)


def dense_overlap(bra, ket):
    if bra.N != ket.N:
        raise DimensionMismatchError(f"states live on {bra.N} and {ket.N} sites")
    if bra.M != ket.M:
        return 0j
    return inner_product(_as_dense(bra), _as_dense(ket))


METHODS = {
    "dense": dense_overlap,
    "mps": mps_overlap,
    "ttn": ttn_overlap,
    "transfer": homogeneous_mps_overlap,
    "homogeneous-ttn": homogeneous_ttn_overlap,
}


def overlap(bra, ket, method="mps", stats=None):
    try:
        func = METHODS[method]
    except KeyError:
        raise DimensionMismatchError(f"unknown overlap method {method!r}")
    if stats is None or func is dense_overlap:
        return func(bra, ket)
    return func(bra, ket, stats=stats)


def fidelity(bra, ket, method="mps"):
    """|⟨bra|ket⟩|² / (⟨bra|bra⟩⟨ket|ket⟩)"""
    norm_bra = overlap(bra, bra, method).real
    norm_ket = overlap(ket, ket, method).real
    if norm_bra == 0 or norm_ket == 0:
        return 0.0
    return float(abs(overlap(bra, ket, method)) ** 2 / (norm_bra * norm_ket))
