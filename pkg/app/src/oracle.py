"""
Brute-force wavefunctions: explicit amplitude tables over the particle-number sector.

A DenseState stores one row per particle configuration (strictly increasing absolute
site positions) and the matching complex amplitude. States are unnormalized unless
normalized() is asked for.
"""
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy.linalg import svdvals

from common import (
    ABS_TOL,
    SCHMIDT_TOL,
    DimensionMismatchError,
    check_oracle_size,
    relative_error,
)
from bethe import size, theta_of_sequence


def basis_configs(sites, M):
    sites = tuple(sites)
    combos = list(itertools.combinations(sites, M))
    return np.array(combos, dtype=int).reshape(len(combos), M)


def _canonical_order(configs):
    if configs.shape[1] == 0:
        return np.arange(configs.shape[0])
    return np.lexsort(configs.T[::-1])


@dataclass(frozen=True, eq=False)
class DenseState:
    sites: Tuple[int, ...]
    M: int
    configs: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(x) for x in self.sites))
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        configs = np.asarray(self.configs, dtype=int)
        if configs.size != len(amps) * self.M:
            raise DimensionMismatchError(
                f"{configs.size} positions do not fit {len(amps)} amplitudes of M={self.M}"
            )
        configs = configs.reshape(len(amps), self.M)
        order = _canonical_order(configs)
        object.__setattr__(self, "configs", configs[order])
        object.__setattr__(self, "amps", amps[order])

    @property
    def N(self):
        return len(self.sites)

    @cached_property
    def _index(self):
        return {tuple(row): i for i, row in enumerate(self.configs.tolist())}

    def amplitude(self, x):
        i = self._index.get(tuple(int(v) for v in x))
        if i is None:
            return 0j
        return complex(self.amps[i])

    def as_dict(self):
        return {tuple(row): complex(a) for row, a in zip(self.configs.tolist(), self.amps)}

    def aligned(self, configs):
        """Amplitudes on the given configurations, zero where this state has none."""
        out = np.zeros(len(configs), dtype=complex)
        for i, row in enumerate(np.asarray(configs).reshape(len(configs), -1).tolist()):
            j = self._index.get(tuple(row))
            if j is not None:
                out[i] = self.amps[j]
        return out

    def densified(self):
        """The same state materialized on the full C(N,M) basis."""
        configs = basis_configs(self.sites, self.M)
        return DenseState(self.sites, self.M, configs, self.aligned(configs))

    def norm(self):
        return float(np.linalg.norm(self.amps))

    def normalized(self):
        n = self.norm()
        if n == 0:
            return self
        return DenseState(self.sites, self.M, self.configs, self.amps / n)

    def scaled(self, factor):
        return DenseState(self.sites, self.M, self.configs, self.amps * factor)

    def __str__(self):
        return f"DenseState: N={self.N}, M={self.M}, {len(self.amps)} amplitudes"


def occupancy_index(config, sites):
    position = {x: i for i, x in enumerate(sites)}
    bits = 0
    for x in config:
        bits |= 1 << position[x]
    return bits


def from_occupancy(bits, sites):
    return tuple(x for i, x in enumerate(sites) if bits >> i & 1)


def vacuum(sites=()):
    return DenseState(tuple(sites), 0, np.zeros((1, 0), dtype=int), np.ones(1))


def _permutation_sum(data, sites, M):
    configs = basis_configs(sites, M)
    if M == 0:
        return DenseState(sites, 0, configs, np.ones(len(configs)))

    site_array = np.asarray(sites)
    position = {x: i for i, x in enumerate(sites)}
    # One row of single-particle amplitudes per symbol, indexed by position in `sites`
    waves = np.array([data.wave(j, site_array) for j in range(1, M + 1)])
    cols = np.vectorize(position.__getitem__, otypes=[int])(configs)

    amps = np.zeros(len(configs), dtype=complex)
    for P in itertools.permutations(range(1, M + 1)):
        term = np.full(len(configs), theta_of_sequence(data, P), dtype=complex)
        for slot, j in enumerate(P):
            term *= waves[j - 1, cols[:, slot]]
        amps += term
    return DenseState(sites, M, configs, amps)


def build_dense_bethe(data, N):
    if data.M > N:
        raise DimensionMismatchError(f"M={data.M} particles do not fit on {N} sites")
    check_oracle_size(N, data.M)
    return _permutation_sum(data, tuple(range(1, N + 1)), data.M)


def build_dense_generalized(data):
    if data.M > data.N:
        raise DimensionMismatchError(f"M={data.M} particles do not fit on {data.N} sites")
    check_oracle_size(data.N, data.M)
    return _permutation_sum(data, tuple(range(1, data.N + 1)), data.M)


def build_dense(data, N=None):
    if data.plane_waves:
        return build_dense_bethe(data, N)
    return build_dense_generalized(data)


def build_local_bethe(data, c, sites):
    sites = tuple(sites)
    m = size(c)
    if m > len(sites):
        raise DimensionMismatchError(
            f"choice of {m} particles does not fit on {len(sites)} sites"
        )
    check_oracle_size(len(sites), m)
    return _permutation_sum(data.restrict(c), sites, m)


def tensor_product(lhs, rhs):
    """Product state on the union of two disjoint site sets."""
    if set(lhs.sites) & set(rhs.sites):
        raise DimensionMismatchError("tensor product factors share lattice sites")
    sites = tuple(sorted(lhs.sites + rhs.sites))
    M = lhs.M + rhs.M
    n_l, n_r = len(lhs.amps), len(rhs.amps)
    configs = np.concatenate(
        [np.repeat(lhs.configs, n_r, axis=0), np.tile(rhs.configs, (n_l, 1))], axis=1
    )
    configs = np.sort(configs, axis=1)
    amps = np.outer(lhs.amps, rhs.amps).reshape(-1)
    return DenseState(sites, M, configs, amps)


def add_states(states, coefficients=None):
    states = list(states)
    if not states:
        raise DimensionMismatchError("cannot sum an empty list of states")
    if coefficients is None:
        coefficients = [1] * len(states)
    sites, M = states[0].sites, states[0].M
    index = {}
    rows, amps = [], []
    for state, coeff in zip(states, coefficients):
        if state.sites != sites or state.M != M:
            raise DimensionMismatchError("summed states must share sites and particle number")
        for row, a in zip(state.configs.tolist(), state.amps):
            key = tuple(row)
            i = index.get(key)
            if i is None:
                index[key] = len(rows)
                rows.append(row)
                amps.append(coeff * a)
            else:
                amps[i] += coeff * a
    return DenseState(sites, M, np.array(rows, dtype=int).reshape(len(rows), M), np.array(amps))


def inner_product(lhs, rhs):
    if lhs.sites != rhs.sites:
        raise DimensionMismatchError(
            f"states live on different lattices ({lhs.N} and {rhs.N} sites)"
        )
    if lhs.M != rhs.M:
        return 0j
    if np.array_equal(lhs.configs, rhs.configs):
        return complex(np.vdot(lhs.amps, rhs.amps))
    return complex(np.vdot(lhs.amps, rhs.aligned(lhs.configs)))


def max_relative_error(actual, expected):
    if actual.sites != expected.sites or actual.M != expected.M:
        raise DimensionMismatchError("compared states differ in lattice or particle number")
    full = expected.densified()
    return relative_error(actual.aligned(full.configs), full.amps)


def _sector_blocks(state, cut):
    if not 1 <= cut < state.N:
        raise DimensionMismatchError(f"cut {cut} must satisfy 1 <= cut < N={state.N}")
    boundary = state.sites[cut - 1]
    blocks = {}
    for row, a in zip(state.configs.tolist(), state.amps):
        m_a = sum(1 for x in row if x <= boundary)
        rows, cols, entries = blocks.setdefault(m_a, ({}, {}, []))
        r = rows.setdefault(tuple(row[:m_a]), len(rows))
        c = cols.setdefault(tuple(row[m_a:]), len(cols))
        entries.append((r, c, a))
    for rows, cols, entries in blocks.values():
        block = np.zeros((len(rows), len(cols)), dtype=complex)
        for r, c, a in entries:
            block[r, c] = a
        yield block


def schmidt_values(state, cut):
    values = [svdvals(block) for block in _sector_blocks(state, cut)]
    if not values:
        return np.zeros(0)
    return np.sort(np.concatenate(values))[::-1]


def schmidt_rank(state, cut, tol=SCHMIDT_TOL):
    values = schmidt_values(state, cut)
    if values.size == 0 or values[0] <= ABS_TOL:
        return 0
    return int(np.sum(values > tol * values[0]))


def entanglement_entropy(state, cut):
    values = schmidt_values(state, cut)
    weights = values**2
    total = weights.sum()
    if total == 0:
        return 0.0
    p = weights[weights > 0] / total
    return float(-np.sum(p * np.log(p)))


def random_dense(sites, M, rng):
    configs = basis_configs(sites, M)
    amps = rng.normal(size=len(configs)) + 1j * rng.normal(size=len(configs))
    return DenseState(tuple(sites), M, configs, amps)
