"""
Sparse tensors indexed by choices.

T-type tensors carry one incoming choice and q outgoing ones and are nonzero only
when the outgoing choices split the incoming one. S-type tensors change basis from a
choice to the occupancy bitstrings of a part (leftmost site of the part at bit 0).
Fused R tensors are the MPS site tensors obtained by contracting T with S.
"""
import itertools
from dataclasses import dataclass, field
from typing import Mapping, Tuple

import numpy as np

from common import DimensionMismatchError, NotHomogeneousError
from bethe import (
    all_choices,
    choice,
    omega_shift,
    size,
    submasks,
    symbols,
    theta_multi,
    theta_pair,
)
from oracle import build_local_bethe, occupancy_index


def choice_domain(M, n_inside, n_outside=None):
    """
    Choices that can flow through an edge whose subtree holds n_inside sites, with
    n_outside sites elsewhere on the lattice.
    """
    lo = 0 if n_outside is None else max(0, M - n_outside)
    return tuple(all_choices(M, lo, min(M, n_inside)))


def _position(domain):
    return {c: i for i, c in enumerate(domain)}


@dataclass(frozen=True, eq=False)
class SparseChoiceTensor:
    domains: Tuple[Tuple[int, ...], ...]
    entries: Mapping[Tuple[int, ...], complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(tuple(d) for d in self.domains))
        members = [set(d) for d in self.domains]
        for idx in self.entries:
            if len(idx) != len(self.domains):
                raise DimensionMismatchError(
                    f"entry {idx} has {len(idx)} indices, tensor has {len(self.domains)}"
                )
            for c, allowed in zip(idx, members):
                if c not in allowed:
                    raise DimensionMismatchError(f"entry {idx} falls outside the index domains")

    @property
    def arity(self):
        return len(self.domains)

    def get(self, idx):
        return self.entries.get(tuple(idx), 0j)

    def nonzero_count(self):
        return sum(1 for v in self.entries.values() if v != 0)

    def to_array(self):
        positions = [_position(d) for d in self.domains]
        out = np.zeros(tuple(len(d) for d in self.domains), dtype=complex)
        for idx, value in self.entries.items():
            out[tuple(p[c] for p, c in zip(positions, idx))] = value
        return out

    def matrices(self):
        """One matrix per incoming choice: T^c as rows a, columns b (binary tensors)."""
        dense = self.to_array()
        return {c: dense[i] for i, c in enumerate(self.domains[0])}


@dataclass(frozen=True, eq=False)
class SiteBasisTensor:
    choice_domain: Tuple[int, ...]
    sites: Tuple[int, ...]
    entries: Mapping[Tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "choice_domain", tuple(self.choice_domain))
        object.__setattr__(self, "sites", tuple(self.sites))
        for a, bits in self.entries:
            if bits.bit_count() != size(a):
                raise DimensionMismatchError(
                    f"bitstring {bits:b} does not hold {size(a)} particles"
                )

    def nonzero_count(self):
        return sum(1 for v in self.entries.values() if v != 0)

    def matrix(self):
        """Rows are occupancy bitstrings of the part, columns are choices."""
        position = _position(self.choice_domain)
        out = np.zeros((2 ** len(self.sites), len(self.choice_domain)), dtype=complex)
        for (a, bits), value in self.entries.items():
            out[bits, position[a]] = value
        return out


@dataclass(frozen=True, eq=False)
class FusedTensor:
    left_domain: Tuple[int, ...]
    right_domain: Tuple[int, ...]
    sites: Tuple[int, ...]
    entries: Mapping[Tuple[int, int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "left_domain", tuple(self.left_domain))
        object.__setattr__(self, "right_domain", tuple(self.right_domain))
        object.__setattr__(self, "sites", tuple(self.sites))

    def nonzero_count(self):
        return sum(1 for v in self.entries.values() if v != 0)

    def matrices(self):
        """One matrix per occupancy bitstring σ: rows μL, columns μR."""
        left, right = _position(self.left_domain), _position(self.right_domain)
        out = {
            bits: np.zeros((len(self.left_domain), len(self.right_domain)), dtype=complex)
            for bits in range(2 ** len(self.sites))
        }
        for (mu_l, mu_r, bits), value in self.entries.items():
            out[bits][left[mu_l], right[mu_r]] = value
        return out

    def pinned(self, left_domain=None, right_domain=None):
        """Same tensor with entries restricted to narrower bond domains."""
        left_domain = self.left_domain if left_domain is None else tuple(left_domain)
        right_domain = self.right_domain if right_domain is None else tuple(right_domain)
        keep_l, keep_r = set(left_domain), set(right_domain)
        entries = {
            idx: v for idx, v in self.entries.items() if idx[0] in keep_l and idx[1] in keep_r
        }
        return FusedTensor(left_domain, right_domain, self.sites, entries)


def _full(data, domain):
    return tuple(all_choices(data.M)) if domain is None else tuple(domain)


def build_T(data, c_domain=None, a_domain=None, b_domain=None):
    c_domain, a_domain, b_domain = (_full(data, d) for d in (c_domain, a_domain, b_domain))
    a_set, b_set = set(a_domain), set(b_domain)
    entries = {}
    for c in c_domain:
        for a in submasks(c):
            b = c ^ a
            if a in a_set and b in b_set:
                entries[(c, a, b)] = theta_pair(data, a, b)
    return SparseChoiceTensor((c_domain, a_domain, b_domain), entries)


def build_T_qary(data, out_domains, in_domain=None):
    out_domains = tuple(tuple(d) for d in out_domains)
    if len(out_domains) < 2:
        raise DimensionMismatchError("a T tensor needs at least 2 outgoing indices")
    in_domain = _full(data, in_domain)
    q = len(out_domains)
    out_sets = [set(d) for d in out_domains]
    entries = {}
    for mu in in_domain:
        mu_symbols = symbols(mu)
        for assignment in itertools.product(range(q), repeat=len(mu_symbols)):
            slots = [[] for _ in range(q)]
            for j, slot in zip(mu_symbols, assignment):
                slots[slot].append(j)
            nus = tuple(choice(*s) for s in slots)
            if all(nu in allowed for nu, allowed in zip(nus, out_sets)):
                entries[(mu,) + nus] = theta_multi(data, nus)
    return SparseChoiceTensor((in_domain,) + out_domains, entries)


def build_T_tilde(data, N_A, c_domain=None, a_domain=None, b_domain=None):
    T = build_T(data, c_domain, a_domain, b_domain)
    entries = {
        (c, a, b): value * omega_shift(data, b, N_A) for (c, a, b), value in T.entries.items()
    }
    return SparseChoiceTensor(T.domains, entries)


def _site_entries(data, domain, sites):
    entries = {}
    for a in domain:
        if size(a) > len(sites):
            continue
        local = build_local_bethe(data, a, sites)
        for row, value in zip(local.configs.tolist(), local.amps):
            entries[(a, occupancy_index(row, sites))] = complex(value)
    return entries


def build_S(data, domain, sites):
    sites = tuple(sites)
    return SiteBasisTensor(domain, sites, _site_entries(data, domain, sites))


def build_S_tilde(data, domain, part_size):
    if not data.plane_waves:
        raise NotHomogeneousError("shifted site tensors need plane-wave (standard) Bethe data")
    sites = tuple(range(1, part_size + 1))
    return SiteBasisTensor(domain, sites, _site_entries(data, domain, sites))


def build_R(data, sites, left_domain=None, right_domain=None, homogeneous=False):
    sites = tuple(sites)
    left_domain, right_domain = _full(data, left_domain), _full(data, right_domain)
    a_domain = choice_domain(data.M, len(sites))
    if homogeneous:
        T = build_T_tilde(data, len(sites), left_domain, a_domain, right_domain)
        S = build_S_tilde(data, a_domain, len(sites))
    else:
        T = build_T(data, left_domain, a_domain, right_domain)
        S = build_S(data, a_domain, sites)

    by_choice = {}
    for (a, bits), value in S.entries.items():
        by_choice.setdefault(a, []).append((bits, value))

    entries = {}
    for (mu_l, a, mu_r), t in T.entries.items():
        for bits, s in by_choice.get(a, ()):
            entries[(mu_l, mu_r, bits)] = entries.get((mu_l, mu_r, bits), 0) + t * s
    return FusedTensor(left_domain, right_domain, S.sites, entries)


def t_normalization(T):
    """Gram matrix Σ_{a,b} T^c_{a,b} conj(T^c'_{a,b}) over incoming choices."""
    dense = T.to_array()
    flat = dense.reshape(dense.shape[0], -1)
    return flat @ flat.conj().T
