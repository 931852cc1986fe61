import math

import numpy as np
import pytest

from common import DimensionMismatchError, NotHomogeneousError
from bethe import LatticePartition, random_bethe, random_generalized
from networks import PlanarTree, build_binary_ttn, build_mps, build_planar_ttn
from oracle import build_dense, inner_product
from overlaps import (
    ContractionStats,
    dense_overlap,
    fidelity,
    homogeneous_mps_overlap,
    homogeneous_ttn_overlap,
    mps_overlap,
    overlap,
    transfer_matrix,
    ttn_overlap,
)


@pytest.mark.parametrize("N", [1, 8, 64, 1024])
def test_plane_wave_norm_by_transfer(bethe1, N):
    net = build_mps(bethe1, LatticePartition.single_sites(min(N, 8)), homogeneous=True)
    assert np.isclose(homogeneous_mps_overlap(net, net, N=N), N)


@pytest.mark.parametrize("N", [1, 5, 16])
def test_plane_wave_norm_by_sweep(bethe1, N):
    net = build_mps(bethe1, LatticePartition.single_sites(N))
    assert np.isclose(mps_overlap(net, net), N)


def test_methods_agree(bethe3, rng):
    other = random_bethe(3, rng)
    partition = LatticePartition.uniform(8, 4)
    expected = inner_product(build_dense(bethe3, 8), build_dense(other, 8))

    values = {
        "mps": mps_overlap(build_mps(bethe3, partition), build_mps(other, partition)),
        "ttn": ttn_overlap(build_binary_ttn(bethe3, partition), build_binary_ttn(other, partition)),
        "homogeneous-ttn": homogeneous_ttn_overlap(
            build_binary_ttn(bethe3, partition, homogeneous=True),
            build_binary_ttn(other, partition, homogeneous=True),
        ),
        "transfer": homogeneous_mps_overlap(
            build_mps(bethe3, partition, homogeneous=True),
            build_mps(other, partition, homogeneous=True),
        ),
        "dense": dense_overlap(build_mps(bethe3, partition), build_mps(other, partition)),
    }
    for method, value in values.items():
        assert np.isclose(value, expected, rtol=1e-9, atol=1e-9), method


def test_overlap_is_antilinear_in_bra(bethe2, rng):
    other = random_bethe(2, rng)
    partition = LatticePartition.single_sites(6)
    a, b = build_mps(bethe2, partition), build_mps(other, partition)
    assert np.isclose(mps_overlap(a, b), np.conj(mps_overlap(b, a)))


def test_different_particle_numbers(bethe1, bethe2):
    partition = LatticePartition.uniform(4, 2)
    for method, build in (
        ("mps", build_mps),
        ("ttn", build_binary_ttn),
    ):
        assert overlap(build(bethe1, partition), build(bethe2, partition), method) == 0
    assert homogeneous_mps_overlap(
        build_mps(bethe1, partition, homogeneous=True),
        build_mps(bethe2, partition, homogeneous=True),
    ) == 0


def test_sweep_cost(bethe2):
    net = build_mps(bethe2, LatticePartition.single_sites(8), homogeneous=True)
    stats = ContractionStats()
    norm = mps_overlap(net, net, stats)
    assert np.isclose(norm, inner_product(build_dense(bethe2, 8), build_dense(bethe2, 8)))
    assert len(stats.ket_multiplies) == 8
    # Interior sites see every same-sector pair of the environment
    M = 2
    assert stats.ket_multiplies[3] == sum(math.comb(M, m) ** 2 * (m + 1) for m in range(M + 1))
    assert stats.off_sector == 0
    assert stats.total > 0


def test_tree_environments_stay_in_sector(bethe3):
    net = build_binary_ttn(bethe3, LatticePartition.uniform(8, 4))
    stats = ContractionStats()
    ttn_overlap(net, net, stats)
    assert stats.merges == 3
    assert stats.off_sector == 0

    homogeneous = build_binary_ttn(bethe3, LatticePartition.uniform(8, 4), homogeneous=True)
    stats = ContractionStats()
    homogeneous_ttn_overlap(homogeneous, homogeneous, stats)
    assert stats.merges == 2


def test_transfer_matrix_is_sector_diagonal(bethe2):
    net = build_mps(bethe2, LatticePartition.single_sites(4), homogeneous=True)
    E, index = transfer_matrix(net.tensors[0], net.tensors[0], 2)
    # Same-sector pairs only: Σ_m C(2, m)²
    assert E.shape == (6, 6)
    assert set(index) == {(0, 0), (1, 1), (1, 2), (2, 1), (2, 2), (3, 3)}


def test_fidelity(bethe2, rng):
    partition = LatticePartition.single_sites(6)
    net = build_mps(bethe2, partition)
    assert np.isclose(fidelity(net, net), 1)
    other = build_mps(random_bethe(2, rng), partition)
    assert 0 <= fidelity(net, other) <= 1 + 1e-12


def test_layout_errors(bethe2):
    a = build_mps(bethe2, LatticePartition.single_sites(4))
    b = build_mps(bethe2, LatticePartition.uniform(4, 2))
    with pytest.raises(DimensionMismatchError):
        mps_overlap(a, b)
    with pytest.raises(DimensionMismatchError):
        overlap(a, a, "nonsense")
    with pytest.raises(NotHomogeneousError):
        homogeneous_mps_overlap(a, a)
    with pytest.raises(DimensionMismatchError):
        ttn_overlap(a, a)


def test_transfer_against_dense_at_large_N(bethe2):
    net = build_mps(bethe2, LatticePartition.single_sites(4), homogeneous=True)
    dense = build_dense(bethe2, 1024)
    expected = inner_product(dense, dense)
    assert np.isclose(homogeneous_mps_overlap(net, net, N=1024), expected, rtol=1e-9, atol=0)


def test_generalized_overlaps(generalized2, rng):
    other = random_generalized(2, 6, rng)
    partition = LatticePartition((2, 2, 2))
    expected = inner_product(build_dense(generalized2), build_dense(other))
    assert np.isclose(
        mps_overlap(build_mps(generalized2, partition), build_mps(other, partition)),
        expected,
        rtol=1e-9,
        atol=1e-9,
    )
    tree = PlanarTree.star(3)
    value = ttn_overlap(
        build_planar_ttn(generalized2, partition, tree), build_planar_ttn(other, partition, tree)
    )
    assert np.isclose(value, expected, rtol=1e-9, atol=1e-9)


def test_transfer_refuses_different_lengths(bethe1):
    long = build_mps(bethe1, LatticePartition.single_sites(8), homogeneous=True)
    short = build_mps(bethe1, LatticePartition.single_sites(4), homogeneous=True)
    with pytest.raises(DimensionMismatchError):
        mps_overlap(long, short)
    with pytest.raises(DimensionMismatchError):
        homogeneous_mps_overlap(long, short)
    with pytest.raises(DimensionMismatchError):
        overlap(long, short, "transfer")
    # An explicit length evaluates both on the same lattice
    assert np.isclose(homogeneous_mps_overlap(long, short, N=8), 8)


@pytest.mark.parametrize("N,products", [(1, 1), (2, 2), (3, 3), (64, 7), (4096, 13)])
def test_transfer_matrix_products(bethe1, N, products):
    net = build_mps(bethe1, LatticePartition.single_sites(1), homogeneous=True)
    stats = ContractionStats()
    assert np.isclose(homogeneous_mps_overlap(net, net, N=N, stats=stats), N)
    assert stats.matrix_products == products


def test_transfer_cost_is_flat_while_sweep_grows(bethe2):
    transfer, sweep = {}, {}
    for N in (64, 4096):
        net = build_mps(bethe2, LatticePartition.single_sites(N), homogeneous=True)
        stats = ContractionStats()
        homogeneous_mps_overlap(net, net, stats=stats)
        transfer[N] = stats.matrix_products
        stats = ContractionStats()
        overlap(net, net, "mps", stats=stats)
        sweep[N] = stats.total

    # 64x more sites: the sweep scales with N, squaring adds log2(64) products
    assert transfer[4096] - transfer[64] == 6
    assert sweep[4096] >= 60 * sweep[64]


def test_dense_overlap_accepts_dense_states(bethe2):
    partition = LatticePartition.single_sites(5)
    dense = build_dense(bethe2, 5)
    net = build_mps(bethe2, partition)
    assert np.isclose(dense_overlap(dense, net), inner_product(dense, dense))
