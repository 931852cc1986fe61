from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from common import (
    DimensionMismatchError,
    NonPlanarTreeError,
    NotHomogeneousError,
    PartitionError,
    check_oracle_size,
    log,
)
from bethe import EMPTY, LatticePartition, all_choices, full_choice, size
from oracle import (
    DenseState,
    add_states,
    basis_configs,
    from_occupancy,
    tensor_product,
    vacuum,
)
from tensors import (
    build_R,
    build_S,
    build_S_tilde,
    build_T_qary,
    build_T_tilde,
    choice_domain,
)


class PlanarTree:
    """
    A rooted tree with ordered children. Leaves are the ints 1..L and must appear in
    that order when the tree is read left to right; internal nodes are tuples of two
    or more children.
    """

    def __init__(self, root):
        self.root = self._freeze(root)
        labels = self.leaves(self.root)
        if labels != list(range(1, len(labels) + 1)):
            raise NonPlanarTreeError(
                f"leaves read left to right are {labels}, expected 1..{len(labels)}"
            )

    @classmethod
    def _freeze(cls, node):
        if isinstance(node, bool):
            raise NonPlanarTreeError(f"tree leaves must be part labels, got {node!r}")
        if isinstance(node, int):
            return node
        if isinstance(node, (list, tuple)):
            if len(node) < 2:
                raise NonPlanarTreeError(
                    f"internal nodes need at least 2 children, got {len(node)}"
                )
            return tuple(cls._freeze(child) for child in node)
        raise NonPlanarTreeError(f"tree nodes must be ints or lists, got {node!r}")

    @classmethod
    def from_nested(cls, nested):
        return cls(nested)

    @classmethod
    def chain(cls, L):
        node = L
        for label in range(L - 1, 0, -1):
            node = (label, node)
        return cls(node)

    @classmethod
    def binary(cls, Z):
        def build(first, count):
            if count == 1:
                return first
            half = count // 2
            return (build(first, half), build(first + half, half))

        return cls(build(1, 2**Z))

    @classmethod
    def star(cls, L):
        if L == 1:
            return cls(1)
        return cls(tuple(range(1, L + 1)))

    @staticmethod
    def leaves(node):
        if isinstance(node, int):
            return [node]
        out = []
        for child in node:
            out.extend(PlanarTree.leaves(child))
        return out

    @property
    def L(self):
        return len(self.leaves(self.root))

    def node(self, path):
        node = self.root
        for i in path:
            node = node[i]
        return node

    def internal_paths(self):
        """Internal node paths, parents before children."""
        out = []
        stack = [()]
        while stack:
            path = stack.pop(0)
            node = self.node(path)
            if isinstance(node, int):
                continue
            out.append(path)
            stack.extend(path + (i,) for i in range(len(node)))
        return out

    def to_nested(self):
        def unfreeze(node):
            if isinstance(node, int):
                return node
            return [unfreeze(child) for child in node]

        return unfreeze(self.root)

    def depth(self):
        def walk(node):
            if isinstance(node, int):
                return 0
            return 1 + max(walk(child) for child in node)

        return walk(self.root)


@dataclass(frozen=True, eq=False)
class TensorNetwork:
    data: object
    partition: LatticePartition
    homogeneous: bool

    @property
    def M(self):
        return self.data.M

    @property
    def N(self):
        return self.partition.N

    @property
    def root_choice(self):
        return full_choice(self.M)


@dataclass(frozen=True, eq=False)
class MatrixProductState(TensorNetwork):
    # tensors[i] connects bonds[i] (left) and bonds[i + 1] (right)
    tensors: Tuple = ()
    bonds: Tuple = ()

    def bond_dimensions(self):
        return [len(b) for b in self.bonds]

    def pinned_tensors(self):
        """Site tensors with the outer bonds fixed to the full choice and ∅."""
        tensors = list(self.tensors)
        if not tensors:
            return tensors
        tensors[0] = tensors[0].pinned(left_domain=(self.root_choice,))
        tensors[-1] = tensors[-1].pinned(right_domain=(EMPTY,))
        return tensors


@dataclass(frozen=True, eq=False)
class TreeTensorNetwork(TensorNetwork):
    tree: Optional[PlanarTree] = None
    node_tensors: dict = field(default_factory=dict)
    leaf_tensors: Tuple = ()
    # Homogeneous binary trees share one tensor per layer and one leaf tensor
    layer_tensors: Tuple = ()
    leaf_tensor: Optional[object] = None

    def leaf_sites(self, label):
        return self.partition.sites(label - 1)

    def edge_domains(self):
        domains = []
        for tensor in self.node_tensors.values():
            domains.extend(tensor.domains)
        for tensor in self.leaf_tensors:
            domains.append(tensor.choice_domain)
        return domains


def _check_data_lattice(data, partition):
    if not data.plane_waves and partition.N != data.N:
        raise DimensionMismatchError(
            f"partition covers {partition.N} sites but the data lives on {data.N}"
        )
    if data.M > partition.N:
        raise DimensionMismatchError(f"M={data.M} particles do not fit on {partition.N} sites")


def _require_homogeneous(data, partition):
    if not data.plane_waves:
        raise NotHomogeneousError("homogeneous networks need plane-wave (standard) Bethe data")
    if not partition.is_uniform:
        raise NotHomogeneousError(f"homogeneous networks need equal parts, got {partition.parts}")


def build_mps(data, partition, homogeneous=False):
    _check_data_lattice(data, partition)
    M, N, L = data.M, partition.N, partition.L

    if homogeneous:
        _require_homogeneous(data, partition)
        full = tuple(all_choices(M))
        p = partition.parts[0]
        site = build_R(data, range(1, p + 1), full, full, homogeneous=True)
        tensors = (site,) * L
        bonds = (full,) * (L + 1)
    else:
        bonds = tuple(
            choice_domain(M, N - partition.offset(i), partition.offset(i)) for i in range(L + 1)
        )
        tensors = tuple(
            build_R(data, partition.sites(i), bonds[i], bonds[i + 1]) for i in range(L)
        )

    log(None, f"built {'homogeneous ' if homogeneous else ''}MPS: M={M}, N={N}, L={L}")
    return MatrixProductState(
        data=data, partition=partition, homogeneous=homogeneous, tensors=tensors, bonds=bonds
    )


def build_planar_ttn(data, partition, tree):
    _check_data_lattice(data, partition)
    if tree.L != partition.L:
        raise PartitionError(f"tree has {tree.L} leaves but the partition has {partition.L} parts")
    M, N = data.M, partition.N

    def covered(node):
        return sum(partition.parts[label - 1] for label in PlanarTree.leaves(node))

    def edge(node):
        n = covered(node)
        return choice_domain(M, n, N - n)

    node_tensors = {}
    for path in tree.internal_paths():
        node = tree.node(path)
        in_domain = (full_choice(M),) if path == () else edge(node)
        node_tensors[path] = build_T_qary(data, [edge(child) for child in node], in_domain)

    leaf_tensors = []
    for label in range(1, tree.L + 1):
        sites = partition.sites(label - 1)
        domain = (full_choice(M),) if tree.L == 1 else choice_domain(M, len(sites), N - len(sites))
        leaf_tensors.append(build_S(data, domain, sites))

    log(None, f"built planar TTN: M={M}, N={N}, L={tree.L}, {len(node_tensors)} nodes")
    return TreeTensorNetwork(
        data=data,
        partition=partition,
        homogeneous=False,
        tree=tree,
        node_tensors=node_tensors,
        leaf_tensors=tuple(leaf_tensors),
    )


def tree_layers(L):
    Z = L.bit_length() - 1
    if L < 1 or 2**Z != L:
        raise PartitionError(f"a regular binary tree needs a power-of-two part count, got {L}")
    return Z


def build_binary_ttn(data, partition, homogeneous=False):
    Z = tree_layers(partition.L)
    tree = PlanarTree.binary(Z)
    if not homogeneous:
        return build_planar_ttn(data, partition, tree)

    _check_data_lattice(data, partition)
    _require_homogeneous(data, partition)
    M, p = data.M, partition.parts[0]
    full = tuple(all_choices(M))

    # Layer z splits regions of p * 2^(Z - z) sites; the right child is shifted by the left half
    layer_tensors = tuple(
        build_T_tilde(data, p * 2 ** (Z - z - 1), full, full, full) for z in range(Z)
    )
    leaf_tensor = build_S_tilde(data, full, p)
    node_tensors = {path: layer_tensors[len(path)] for path in tree.internal_paths()}

    log(None, f"built homogeneous binary TTN: M={M}, N={partition.N}, Z={Z}")
    return TreeTensorNetwork(
        data=data,
        partition=partition,
        homogeneous=True,
        tree=tree,
        node_tensors=node_tensors,
        leaf_tensors=(leaf_tensor,) * partition.L,
        layer_tensors=layer_tensors,
        leaf_tensor=leaf_tensor,
    )


# Contraction back to an amplitude table


def _leaf_blocks(tensor, sites):
    """choice -> local DenseState on the part's absolute sites."""
    grouped = {}
    for (a, bits), value in tensor.entries.items():
        rows, amps = grouped.setdefault(a, ([], []))
        rows.append(from_occupancy(bits, sites))
        amps.append(value)
    blocks = {}
    for a, (rows, amps) in grouped.items():
        blocks[a] = DenseState(sites, size(a), rows, amps)
    return blocks


def _combine(entries, child_blocks):
    """Sum over T entries (μ; ν1..νq) of value times the product of child blocks."""
    terms = {}
    for idx, value in entries:
        mu, nus = idx[0], idx[1:]
        if value == 0 or any(nu not in blocks for nu, blocks in zip(nus, child_blocks)):
            continue
        product = child_blocks[0][nus[0]]
        for nu, blocks in zip(nus[1:], child_blocks[1:]):
            product = tensor_product(product, blocks[nu])
        states, coeffs = terms.setdefault(mu, ([], []))
        states.append(product)
        coeffs.append(value)
    return {mu: add_states(states, coeffs) for mu, (states, coeffs) in terms.items()}


def _contract_mps(net):
    partition = net.partition
    tensors = net.pinned_tensors()
    blocks = {EMPTY: vacuum(())}
    for i in reversed(range(partition.L)):
        sites = partition.sites(i)
        occupations = {
            bits: DenseState(sites, bits.bit_count(), [from_occupancy(bits, sites)], [1])
            for (_, _, bits) in tensors[i].entries
        }
        entries = [
            ((mu_l, bits, mu_r), value)
            for (mu_l, mu_r, bits), value in tensors[i].entries.items()
        ]
        blocks = _combine(entries, [occupations, blocks])
    return blocks


def _contract_tree(net):
    tree = net.tree

    def contract(path):
        node = tree.node(path)
        if isinstance(node, int):
            return _leaf_blocks(net.leaf_tensors[node - 1], net.leaf_sites(node))
        children = [contract(path + (i,)) for i in range(len(node))]
        tensor = net.node_tensors[path]
        return _combine(tensor.entries.items(), children)

    return contract(())


def contract_to_dense(net):
    check_oracle_size(net.N, net.M)
    if isinstance(net, MatrixProductState):
        blocks = _contract_mps(net)
    else:
        blocks = _contract_tree(net)
    lattice = tuple(range(1, net.N + 1))
    top = blocks.get(net.root_choice)
    if top is None:
        configs = basis_configs(lattice, net.M)
        return DenseState(lattice, net.M, configs, np.zeros(len(configs)))
    return top.densified()


def max_bond_dimension(net):
    if isinstance(net, MatrixProductState):
        return max(net.bond_dimensions())
    return max(len(d) for d in net.edge_domains())


def nonzero_count(net):
    if isinstance(net, MatrixProductState):
        return sum(t.nonzero_count() for t in net.tensors)
    return sum(t.nonzero_count() for t in net.node_tensors.values()) + sum(
        t.nonzero_count() for t in net.leaf_tensors
    )
