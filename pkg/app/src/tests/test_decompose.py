import numpy as np
import pytest

from common import DimensionMismatchError, PartitionError
from bethe import (
    BetheData,
    LatticePartition,
    RingPartition,
    choice,
    full_choice,
    random_bethe,
    size,
    theta_pair,
)
from decompose import (
    bipartite_decompose,
    contiguous_decompose,
    local_factor_rank,
    multipartite_decompose,
    reconstruct,
    term_count,
)
from oracle import build_dense, max_relative_error


@pytest.mark.parametrize(
    "M, parts, expected",
    [
        (1, (3, 3), 2),
        (3, (4, 4), 8),
        (2, (1, 2), 3),
        (2, (2, 2, 2), 9),
    ],
)
def test_term_counts(M, parts, expected, rng):
    data = random_bethe(M, rng)
    terms = multipartite_decompose(data, LatticePartition(parts))
    assert len(terms) == expected == term_count(M, parts)
    for t in terms:
        assert sum(t.choices) == full_choice(M)
        assert sum(size(c) for c in t.choices) == M


def test_three_particle_coefficients(bethe3):
    terms = bipartite_decompose(bethe3, LatticePartition.bipartition(6, 3))
    by_choices = {t.choices: t.coefficient for t in terms}
    a, b = choice(2, 3), choice(1)
    expected = bethe3.scattering(2, 1) * bethe3.scattering(3, 1)
    assert np.isclose(by_choices[(a, b)], expected)
    assert np.isclose(by_choices[(a, b)], theta_pair(bethe3, a, b))
    assert by_choices[(choice(1, 2, 3), 0)] == 1
    assert by_choices[(choice(1), choice(2, 3))] == 1


@pytest.mark.parametrize("cut", [1, 3, 5])
def test_bipartite_reconstruction(bethe3, cut):
    terms = bipartite_decompose(bethe3, LatticePartition.bipartition(6, cut))
    assert max_relative_error(reconstruct(terms, 6), build_dense(bethe3, 6)) < 1e-10


def test_multipartite_reconstruction(bethe3):
    partition = LatticePartition((2, 1, 3, 1))
    terms = multipartite_decompose(bethe3, partition)
    assert max_relative_error(reconstruct(terms, 7), build_dense(bethe3, 7)) < 1e-10


def test_generalized_reconstruction(generalized2):
    terms = multipartite_decompose(generalized2, LatticePartition((2, 2, 2)))
    assert max_relative_error(reconstruct(terms, 6), build_dense(generalized2)) < 1e-10
    with pytest.raises(DimensionMismatchError):
        multipartite_decompose(generalized2, LatticePartition((2, 2)))


def test_bipartite_needs_two_parts(bethe2):
    with pytest.raises(PartitionError):
        bipartite_decompose(bethe2, LatticePartition((1, 1, 1)))


@pytest.mark.parametrize(
    "ring",
    [
        RingPartition(N=6, left=1, middle=(4,), right=1),
        RingPartition(N=7, left=2, middle=(2, 2), right=1),
        RingPartition(N=5, left=1, middle=(1, 1, 2), right=0),
    ],
)
def test_contiguous_reconstruction(bethe3, ring):
    terms = contiguous_decompose(bethe3, ring)
    assert len(terms) <= ring.L**3
    oracle = build_dense(bethe3, ring.N)
    assert max_relative_error(reconstruct(terms, ring.N), oracle) < 1e-10


def test_contiguous_groups_wrapped_choices(bethe2):
    ring = RingPartition(N=4, left=1, middle=(2,), right=1)
    terms = contiguous_decompose(bethe2, ring)
    # Both particles on the wrapped part: left-left is blocked by capacity 1
    wrapped = [t for t in terms if t.choices == (choice(1, 2), 0)][0]
    assert len(wrapped.splits) == 2
    assert len(terms) == 4


def test_local_factor_rank(bethe3):
    terms = bipartite_decompose(bethe3, LatticePartition.bipartition(8, 4))
    for part in (0, 1):
        assert local_factor_rank(terms, part) <= 2**3


def test_reconstruct_checks_coverage(bethe2):
    terms = bipartite_decompose(bethe2, LatticePartition.bipartition(4, 2))
    with pytest.raises(DimensionMismatchError):
        reconstruct(terms, 5)
    with pytest.raises(DimensionMismatchError):
        reconstruct([], 4)


def test_vacuum_decomposes_to_one_term():
    data = BetheData(M=0, k=[], theta={})
    terms = multipartite_decompose(data, LatticePartition((2, 2)))
    assert len(terms) == 1
    assert reconstruct(terms, 4).amps.tolist() == [1]


def test_term_counting():
    assert term_count(3, (1, 1, 1)) == 6
    assert term_count(2, (2, 2, 2)) == 9
    # Bipartite counts clip the particle number on each side
    assert term_count(3, (5, 5)) == 8
    assert term_count(3, (1, 2)) == 3


@pytest.mark.parametrize("cut", [1, 3, 5])
def test_generalized_bipartite_reconstruction(generalized2, cut):
    terms = bipartite_decompose(generalized2, LatticePartition.bipartition(6, cut))
    assert len(terms) == term_count(2, (cut, 6 - cut))
    assert max_relative_error(reconstruct(terms, 6), build_dense(generalized2)) < 1e-10


@pytest.mark.parametrize(
    "ring",
    [
        RingPartition(N=6, left=1, middle=(4,), right=1),
        RingPartition(N=6, left=2, middle=(1, 2), right=1),
    ],
)
def test_generalized_contiguous_reconstruction(generalized2, ring):
    terms = contiguous_decompose(generalized2, ring)
    assert max_relative_error(reconstruct(terms, 6), build_dense(generalized2)) < 1e-10
