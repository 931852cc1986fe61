import numpy as np
import pytest

from common import DimensionMismatchError, NonPlanarTreeError, NotHomogeneousError, PartitionError
from bethe import BetheData, LatticePartition, random_bethe
from networks import (
    PlanarTree,
    build_binary_ttn,
    build_mps,
    build_planar_ttn,
    contract_to_dense,
    max_bond_dimension,
    nonzero_count,
    tree_layers,
)
from oracle import build_dense, max_relative_error


def assert_matches_oracle(net, data, N):
    assert max_relative_error(contract_to_dense(net), build_dense(data, N)) < 1e-10


@pytest.mark.parametrize("parts", [(1,) * 6, (2, 3, 1), (6,), (3, 3)])
def test_mps_matches_oracle(bethe3, parts):
    assert_matches_oracle(build_mps(bethe3, LatticePartition(parts)), bethe3, 6)


def test_mps_generalized(generalized2):
    net = build_mps(generalized2, LatticePartition((1, 2, 3)))
    assert_matches_oracle(net, generalized2, None)
    with pytest.raises(DimensionMismatchError):
        build_mps(generalized2, LatticePartition((2, 2)))


def test_mps_bond_dimensions(bethe2):
    net = build_mps(bethe2, LatticePartition.single_sites(6))
    assert net.bond_dimensions() == [1, 3, 4, 4, 4, 3, 1]
    assert max_bond_dimension(net) == 4


@pytest.mark.parametrize("M", [1, 2, 3])
def test_bond_dimension_bound(M, rng):
    data = random_bethe(M, rng)
    for net in (
        build_mps(data, LatticePartition.single_sites(8)),
        build_binary_ttn(data, LatticePartition.uniform(8, 4)),
    ):
        assert max_bond_dimension(net) <= 2**M


@pytest.mark.parametrize("parts", [(2, 2, 2, 2), (1, 3, 2, 2), (1,) * 8])
def test_binary_ttn_matches_oracle(bethe3, parts):
    assert_matches_oracle(build_binary_ttn(bethe3, LatticePartition(parts)), bethe3, 8)


@pytest.mark.parametrize(
    "nested",
    [
        [1, [2, 3], 4],
        [[1, 2, 3], 4],
        [1, 2, 3, 4],
        [[[1, 2], 3], 4],
    ],
)
def test_planar_ttn_matches_oracle(bethe3, nested):
    partition = LatticePartition((2, 1, 2, 2))
    net = build_planar_ttn(bethe3, partition, PlanarTree.from_nested(nested))
    assert_matches_oracle(net, bethe3, 7)


def test_chain_and_star(bethe2, generalized2):
    partition = LatticePartition((2, 2, 2))
    for tree in (PlanarTree.chain(3), PlanarTree.star(3)):
        assert_matches_oracle(build_planar_ttn(bethe2, partition, tree), bethe2, 6)
        assert_matches_oracle(build_planar_ttn(generalized2, partition, tree), generalized2, None)


def test_single_leaf_tree(bethe2):
    net = build_planar_ttn(bethe2, LatticePartition((4,)), PlanarTree.star(1))
    assert_matches_oracle(net, bethe2, 4)


@pytest.mark.parametrize("parts", [(1,) * 8, (2, 2, 2, 2), (4, 4)])
def test_homogeneous_networks(bethe3, parts):
    partition = LatticePartition(parts)
    oracle = build_dense(bethe3, 8)
    for net in (
        build_mps(bethe3, partition, homogeneous=True),
        build_binary_ttn(bethe3, partition, homogeneous=True),
    ):
        assert net.homogeneous
        assert max_relative_error(contract_to_dense(net), oracle) < 1e-10


def test_homogeneous_shares_tensors(bethe2):
    net = build_mps(bethe2, LatticePartition.uniform(8, 4), homogeneous=True)
    assert all(t is net.tensors[0] for t in net.tensors)
    tree = build_binary_ttn(bethe2, LatticePartition.uniform(8, 4), homogeneous=True)
    assert len(tree.layer_tensors) == 2
    assert all(t is tree.leaf_tensor for t in tree.leaf_tensors)


def test_homogeneous_requirements(bethe2, generalized2):
    with pytest.raises(NotHomogeneousError):
        build_mps(bethe2, LatticePartition((2, 4)), homogeneous=True)
    with pytest.raises(NotHomogeneousError):
        build_mps(generalized2, LatticePartition((2, 2, 2)), homogeneous=True)


def test_planar_tree_validation():
    with pytest.raises(NonPlanarTreeError):
        PlanarTree.from_nested([2, 1])
    with pytest.raises(NonPlanarTreeError):
        PlanarTree.from_nested([[1, 3], 2])
    with pytest.raises(NonPlanarTreeError):
        PlanarTree.from_nested([[1], 2])
    with pytest.raises(NonPlanarTreeError):
        PlanarTree.from_nested([1, "2"])


def test_planar_tree_shapes():
    tree = PlanarTree.binary(2)
    assert tree.to_nested() == [[1, 2], [3, 4]]
    assert tree.L == 4
    assert tree.depth() == 2
    assert tree.internal_paths() == [(), (0,), (1,)]
    assert PlanarTree.chain(3).to_nested() == [1, [2, 3]]


def test_tree_layers():
    assert tree_layers(1) == 0
    assert tree_layers(8) == 3
    with pytest.raises(PartitionError):
        tree_layers(6)


def test_tree_must_fit_partition(bethe2):
    with pytest.raises(PartitionError):
        build_planar_ttn(bethe2, LatticePartition((2, 2)), PlanarTree.star(3))


def test_vacuum_network():
    data = BetheData(M=0, k=[], theta={})
    net = build_mps(data, LatticePartition.single_sites(3))
    assert contract_to_dense(net).amps.tolist() == [1]
    assert nonzero_count(net) == 3


def random_tree(labels, rng):
    if len(labels) == 1:
        return labels[0]
    groups = int(rng.integers(2, len(labels) + 1))
    cuts = sorted(rng.choice(np.arange(1, len(labels)), size=groups - 1, replace=False))
    bounds = [0, *cuts, len(labels)]
    return [random_tree(labels[a:b], rng) for a, b in zip(bounds, bounds[1:])]


@pytest.mark.parametrize("M", [0, 1, 2, 3])
@pytest.mark.parametrize("N", [4, 6, 8, 10])
def test_random_networks_match_oracle(M, N, rng):
    partition = LatticePartition.single_sites(N)
    for _ in range(20):
        data = random_bethe(M, rng)
        oracle = build_dense(data, N)
        nets = [
            build_mps(data, partition),
            build_mps(data, partition, homogeneous=True),
            build_planar_ttn(
                data, partition, PlanarTree.from_nested(random_tree(list(range(1, N + 1)), rng))
            ),
        ]
        if N in (4, 8):
            nets.append(build_binary_ttn(data, LatticePartition.uniform(N, 4)))
            nets.append(build_binary_ttn(data, LatticePartition.uniform(N, 4), homogeneous=True))
        for net in nets:
            assert max_relative_error(contract_to_dense(net), oracle) < 1e-10


@pytest.mark.parametrize("parts", [(3, 3), (1, 1, 2, 2)])
def test_binary_ttn_generalized(generalized2, parts):
    partition = LatticePartition(parts)
    assert_matches_oracle(build_binary_ttn(generalized2, partition), generalized2, None)
