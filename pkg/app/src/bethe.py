"""
Bethe data, choices, permutations and scattering amplitudes.

A choice is an ordered subset of the particle symbols 1..M. Choices are stored as
plain ints: symbol j lives at bit j-1, so union and disjointness are bit operations
and the symbols of a choice come out in increasing order.
"""
import itertools
from dataclasses import dataclass, field
from typing import Mapping, Tuple

import numpy as np

from common import (
    ChoiceOverlapError,
    DimensionMismatchError,
    NotHomogeneousError,
    PartitionError,
)

Choice = int
Permutation = Tuple[int, ...]

EMPTY = 0


# Choices


def choice(*symbols):
    c = 0
    for j in symbols:
        if j < 1:
            raise DimensionMismatchError(f"particle symbols start at 1, got {j}")
        bit = 1 << (j - 1)
        if c & bit:
            raise ChoiceOverlapError(f"symbol {j} repeated in choice {symbols}")
        c |= bit
    return c


def symbols(c):
    out = []
    j = 1
    while c:
        if c & 1:
            out.append(j)
        c >>= 1
        j += 1
    return tuple(out)


def size(c):
    return c.bit_count()


def full_choice(M):
    return (1 << M) - 1


def all_choices(M, lo=0, hi=None):
    """
    Choices over M symbols ordered by particle number, then lexicographically:
    (), (1), ..., (M), (1,2), (1,3), ..., (1..M). Only particle numbers in [lo, hi].
    """
    if hi is None:
        hi = M
    lo = max(lo, 0)
    hi = min(hi, M)
    out = []
    for m in range(lo, hi + 1):
        for combo in itertools.combinations(range(1, M + 1), m):
            out.append(choice(*combo))
    return out


def submasks(c):
    sub = c
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & c


def choice_union(a, b):
    if a & b:
        raise ChoiceOverlapError(
            f"choices {symbols(a)} and {symbols(b)} share {symbols(a & b)}"
        )
    return a | b


def format_choice(c):
    if c == EMPTY:
        return "∅"
    return "(" + ",".join(str(j) for j in symbols(c)) + ")"


# Bethe data


def _pairs(M):
    return [(j2, j1) for j2 in range(1, M + 1) for j1 in range(1, j2)]


def _validate_theta(M, theta):
    expected = set(_pairs(M))
    keys = set(theta.keys())
    if keys != expected:
        missing = sorted(expected - keys)
        extra = sorted(keys - expected)
        raise DimensionMismatchError(
            f"theta needs one angle per pair (j2, j1) with j1 < j2 <= {M}; "
            f"missing {missing}, unexpected {extra}"
        )


@dataclass(frozen=True, eq=False)
class BetheData:
    M: int
    k: Tuple[float, ...]
    theta: Mapping[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(float(x) for x in self.k))
        object.__setattr__(
            self, "theta", {(int(a), int(b)): float(v) for (a, b), v in self.theta.items()}
        )
        if self.M < 0:
            raise DimensionMismatchError(f"M must be non-negative, got {self.M}")
        if len(self.k) != self.M:
            raise DimensionMismatchError(
                f"k has {len(self.k)} quasi-momenta but M={self.M}"
            )
        _validate_theta(self.M, self.theta)

    plane_waves = True

    @property
    def real_theta(self):
        return True

    def scattering(self, j2, j1):
        """Two-symbol amplitude -e^{iθ_{j2 j1}} for j2 > j1."""
        return -np.exp(1j * self.theta[(j2, j1)])

    def wave(self, j, xs):
        return np.exp(1j * self.k[j - 1] * np.asarray(xs))

    def restrict(self, c):
        chosen = symbols(c)
        relabel = {j: i + 1 for i, j in enumerate(chosen)}
        theta = {
            (relabel[j2], relabel[j1]): self.theta[(j2, j1)]
            for j2 in chosen
            for j1 in chosen
            if j1 < j2
        }
        return BetheData(M=len(chosen), k=[self.k[j - 1] for j in chosen], theta=theta)

    def __str__(self):
        return f"BetheData: M={self.M}, k={self.k}"


@dataclass(frozen=True, eq=False)
class GeneralizedBetheData:
    M: int
    N: int
    phi: np.ndarray
    theta: Mapping[Tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex)
        if self.M == 0 and phi.size == 0:
            phi = np.zeros((0, self.N), dtype=complex)
        if phi.shape != (self.M, self.N):
            shape = "x".join(str(n) for n in phi.shape) or "scalar"
            raise DimensionMismatchError(f"phi must be {self.M}x{self.N}, got {shape}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(
            self, "theta", {(int(a), int(b)): complex(v) for (a, b), v in self.theta.items()}
        )
        _validate_theta(self.M, self.theta)

    plane_waves = False

    @property
    def real_theta(self):
        return all(abs(v.imag) == 0 for v in self.theta.values())

    def scattering(self, j2, j1):
        return -np.exp(1j * self.theta[(j2, j1)])

    def wave(self, j, xs):
        xs = np.asarray(xs)
        if xs.size and (xs.min() < 1 or xs.max() > self.N):
            raise DimensionMismatchError(
                f"positions {xs.min()}..{xs.max()} fall outside the {self.N}-site lattice"
            )
        return self.phi[j - 1, xs - 1]

    def restrict(self, c):
        chosen = symbols(c)
        relabel = {j: i + 1 for i, j in enumerate(chosen)}
        theta = {
            (relabel[j2], relabel[j1]): self.theta[(j2, j1)]
            for j2 in chosen
            for j1 in chosen
            if j1 < j2
        }
        rows = [j - 1 for j in chosen]
        return GeneralizedBetheData(
            M=len(chosen), N=self.N, phi=self.phi[rows, :], theta=theta
        )

    def __str__(self):
        return f"GeneralizedBetheData: M={self.M}, N={self.N}"


def as_generalized(data, N):
    """Generalized data that reproduces plane-wave `data` on an N-site lattice."""
    xs = np.arange(1, N + 1)
    phi = np.array([data.wave(j, xs) for j in range(1, data.M + 1)]).reshape(data.M, N)
    return GeneralizedBetheData(M=data.M, N=N, phi=phi, theta=dict(data.theta))


def random_bethe(M, rng):
    k = rng.uniform(-np.pi, np.pi, size=M)
    theta = {pair: rng.uniform(0, 2 * np.pi) for pair in _pairs(M)}
    return BetheData(M=M, k=k, theta=theta)


def random_generalized(M, N, rng):
    phi = rng.normal(size=(M, N)) + 1j * rng.normal(size=(M, N))
    theta = {
        pair: complex(rng.uniform(0, 2 * np.pi), 0.3 * rng.normal())
        for pair in _pairs(M)
    }
    return GeneralizedBetheData(M=M, N=N, phi=phi, theta=theta)


# Scattering amplitudes


def theta_of_sequence(data, seq):
    """Θ for an ordered sequence of distinct symbols: one -e^{iθ} per inverted pair."""
    amp = 1
    for i1 in range(len(seq)):
        for i2 in range(i1 + 1, len(seq)):
            if seq[i1] > seq[i2]:
                amp *= data.scattering(seq[i1], seq[i2])
    return complex(amp)


def _check_permutation(P, M):
    if len(P) != M or sorted(P) != list(range(1, M + 1)):
        raise DimensionMismatchError(f"{tuple(P)} is not a permutation of {M} symbols")


def theta_of_permutation(data, P):
    _check_permutation(P, data.M)
    return theta_of_sequence(data, P)


def theta_pair(data, a, b):
    if a & b:
        raise ChoiceOverlapError(
            f"choices {format_choice(a)} and {format_choice(b)} overlap"
        )
    amp = 1
    for alpha in symbols(a):
        for beta in symbols(b):
            if alpha > beta:
                amp *= data.scattering(alpha, beta)
    return complex(amp)


def theta_multi(data, parts):
    parts = list(parts)
    amp = 1
    for l1 in range(len(parts)):
        for l2 in range(l1 + 1, len(parts)):
            amp *= theta_pair(data, parts[l1], parts[l2])
    return complex(amp)


def factorize_permutation(P, M_A):
    """
    Split P into the choices a (first M_A images, sorted) and b (the rest), and the
    local permutations R, S that put a and b back in P's order.
    """
    P = tuple(P)
    _check_permutation(P, len(P))
    if not 0 <= M_A <= len(P):
        raise DimensionMismatchError(f"M_A={M_A} outside 0..{len(P)}")
    prefix, suffix = P[:M_A], P[M_A:]
    a_sorted, b_sorted = sorted(prefix), sorted(suffix)
    R = tuple(a_sorted.index(p) + 1 for p in prefix)
    S = tuple(b_sorted.index(p) + 1 for p in suffix)
    return R, S, choice(*prefix), choice(*suffix)


def compose_permutation(R, S, a, b):
    a_sorted, b_sorted = symbols(a), symbols(b)
    if len(R) != len(a_sorted) or len(S) != len(b_sorted):
        raise DimensionMismatchError("local permutations do not match their choices")
    return tuple(a_sorted[r - 1] for r in R) + tuple(b_sorted[s - 1] for s in S)


def omega_shift(data, b, N_A):
    if not data.plane_waves:
        raise NotHomogeneousError("shift phases need plane-wave (standard) Bethe data")
    total = sum(data.k[j - 1] for j in symbols(b))
    return complex(np.exp(1j * total * N_A))


# Lattice partitions


@dataclass(frozen=True)
class LatticePartition:
    parts: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(int(p) for p in self.parts))
        if not self.parts:
            raise PartitionError("a partition needs at least one part")
        if any(p < 1 for p in self.parts):
            raise PartitionError(f"every part needs at least one site, got {self.parts}")

    @classmethod
    def uniform(cls, N, L):
        if L < 1 or N % L:
            raise PartitionError(f"cannot split {N} sites into {L} equal parts")
        return cls((N // L,) * L)

    @classmethod
    def bipartition(cls, N, N_A):
        if not 1 <= N_A < N:
            raise PartitionError(f"cut {N_A} must satisfy 1 <= N_A < N={N}")
        return cls((N_A, N - N_A))

    @classmethod
    def single_sites(cls, N):
        return cls((1,) * N)

    @property
    def N(self):
        return sum(self.parts)

    @property
    def L(self):
        return len(self.parts)

    @property
    def is_uniform(self):
        return len(set(self.parts)) == 1

    def offset(self, i):
        return sum(self.parts[:i])

    def sites(self, i):
        start = self.offset(i) + 1
        return tuple(range(start, start + self.parts[i]))


@dataclass(frozen=True)
class RingPartition:
    """
    Contiguous partition on a ring: part A1 is the first `left` sites together with
    the last `right` sites, the `middle` parts sit in between.
    """

    N: int
    left: int
    middle: Tuple[int, ...]
    right: int

    def __post_init__(self):
        object.__setattr__(self, "middle", tuple(int(p) for p in self.middle))
        if self.left < 0 or self.right < 0 or self.left + self.right < 1:
            raise PartitionError("part A1 needs sites at the start or end of the lattice")
        if self.left < 1:
            raise PartitionError("part A1 must start at the first lattice site")
        if any(p < 1 for p in self.middle):
            raise PartitionError(f"every middle part needs sites, got {self.middle}")
        if self.left + sum(self.middle) + self.right != self.N:
            raise PartitionError(
                f"parts {self.left}+{self.middle}+{self.right} do not cover {self.N} sites"
            )

    @property
    def L(self):
        return 1 + len(self.middle)

    def left_sites(self):
        return tuple(range(1, self.left + 1))

    def right_sites(self):
        return tuple(range(self.N - self.right + 1, self.N + 1))

    def sites(self, i):
        if i == 0:
            return self.left_sites() + self.right_sites()
        start = self.left + sum(self.middle[: i - 1]) + 1
        return tuple(range(start, start + self.middle[i - 1]))
