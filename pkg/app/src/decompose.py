"""
Fractal decompositions of Bethe wavefunctions into products of local Bethe
wavefunctions: left-right bipartite and multipartite, and contiguous partitions of a
ring where the first part wraps around the lattice ends.
"""
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from common import DimensionMismatchError, PartitionError, log
from bethe import choice, size, theta_multi
from oracle import add_states, build_local_bethe, tensor_product


@dataclass(frozen=True, eq=False)
class DecompositionTerm:
    data: object
    choices: Tuple[int, ...]
    coefficient: complex
    parts: Tuple[Tuple[int, ...], ...]

    @property
    def M(self):
        return sum(size(c) for c in self.choices)

    @cached_property
    def factors(self):
        return tuple(
            build_local_bethe(self.data, c, sites)
            for c, sites in zip(self.choices, self.parts)
        )

    def state(self):
        product = self.factors[0]
        for factor in self.factors[1:]:
            product = tensor_product(product, factor)
        return product.scaled(self.coefficient)


@dataclass(frozen=True, eq=False)
class ContiguousTerm(DecompositionTerm):
    """
    A term whose first factor lives on the wrapped part. `splits` lists every way the
    first choice divides between the left block and the right block, together with
    the amplitude of that split.
    """

    left_sites: Tuple[int, ...] = ()
    right_sites: Tuple[int, ...] = ()
    splits: Tuple[Tuple[int, int, complex], ...] = ()

    @cached_property
    def factors(self):
        pieces = [
            tensor_product(
                build_local_bethe(self.data, a_left, self.left_sites),
                build_local_bethe(self.data, a_right, self.right_sites),
            )
            for a_left, a_right, _ in self.splits
        ]
        psi = add_states(pieces, [amp for _, _, amp in self.splits])
        rest = tuple(
            build_local_bethe(self.data, c, sites)
            for c, sites in zip(self.choices[1:], self.parts[1:])
        )
        return (psi,) + rest


def _assignments(M, capacities):
    """Symbol -> slot assignments in lexicographic order, skipping overfull slots."""
    for assignment in itertools.product(range(len(capacities)), repeat=M):
        counts = [0] * len(capacities)
        for slot in assignment:
            counts[slot] += 1
        if all(n <= cap for n, cap in zip(counts, capacities)):
            yield assignment


def _choices_of(assignment, n_slots):
    chosen = [[] for _ in range(n_slots)]
    for j, slot in enumerate(assignment, start=1):
        chosen[slot].append(j)
    return tuple(choice(*c) for c in chosen)


def multipartite_decompose(data, partition):
    if data.plane_waves is False and partition.N != data.N:
        raise DimensionMismatchError(
            f"partition covers {partition.N} sites but the data lives on {data.N}"
        )
    parts = tuple(partition.sites(i) for i in range(partition.L))
    terms = []
    for assignment in _assignments(data.M, partition.parts):
        choices = _choices_of(assignment, partition.L)
        terms.append(
            DecompositionTerm(
                data=data,
                choices=choices,
                coefficient=theta_multi(data, choices),
                parts=parts,
            )
        )
    log(None, f"decomposed M={data.M} over {partition.L} parts into {len(terms)} terms")
    return terms


def bipartite_decompose(data, partition):
    if partition.L != 2:
        raise PartitionError(f"bipartite decomposition needs 2 parts, got {partition.L}")
    return multipartite_decompose(data, partition)


def contiguous_decompose(data, ring):
    if data.plane_waves is False and ring.N != data.N:
        raise DimensionMismatchError(
            f"ring covers {ring.N} sites but the data lives on {data.N}"
        )
    # Left-right slots: A1 left block, the middle parts, A1 right block
    capacities = (ring.left,) + ring.middle + (ring.right,)
    n_slots = len(capacities)
    left_sites, right_sites = ring.left_sites(), ring.right_sites()

    grouped = {}
    for assignment in _assignments(data.M, capacities):
        slots = _choices_of(assignment, n_slots)
        amp = theta_multi(data, slots)
        a_left, middle, a_right = slots[0], slots[1:-1], slots[-1]
        key = (a_left | a_right,) + middle
        grouped.setdefault(key, []).append((a_left, a_right, amp))

    parts = tuple(ring.sites(i) for i in range(ring.L))
    terms = [
        ContiguousTerm(
            data=data,
            choices=key,
            coefficient=1,
            parts=parts,
            left_sites=left_sites,
            right_sites=right_sites,
            splits=tuple(splits),
        )
        for key, splits in grouped.items()
    ]
    log(None, f"decomposed M={data.M} over a ring of {ring.L} parts into {len(terms)} terms")
    return terms


def reconstruct(terms, N):
    terms = list(terms)
    if not terms:
        raise DimensionMismatchError("nothing to reconstruct from an empty term list")
    lattice = tuple(range(1, N + 1))
    states = []
    for term in terms:
        covered = sorted(x for sites in term.parts for x in sites)
        if tuple(covered) != lattice:
            raise DimensionMismatchError(
                f"term parts cover {len(covered)} sites, expected exactly 1..{N}"
            )
        states.append(term.state())
    return add_states(states).densified()


def term_count(M, capacities):
    return sum(1 for _ in _assignments(M, capacities))


def local_factor_rank(terms, part, tol=1e-9):
    """
    Numerical rank of the distinct local factors on one part, summed over particle
    numbers (factors with different particle numbers are orthogonal).
    """
    by_sector = {}
    for term in terms:
        # The wrapped factor depends on every choice of its term
        if isinstance(term, ContiguousTerm) and part == 0:
            key = term.choices
        else:
            key = term.choices[part]
        factor = term.factors[part]
        by_sector.setdefault(factor.M, {}).setdefault(key, factor.densified().amps)

    rank = 0
    for vectors in by_sector.values():
        matrix = np.array(list(vectors.values()))
        scale = np.abs(matrix).max() if matrix.size else 0
        if scale == 0:
            continue
        rank += int(np.linalg.matrix_rank(matrix, tol=tol * scale))
    return rank
