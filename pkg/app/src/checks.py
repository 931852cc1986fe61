from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from common import REL_TOL, BetheError, is_close, log
from bethe import LatticePartition, RingPartition, size
from circuit import verify_preparation
from decompose import (
    bipartite_decompose,
    contiguous_decompose,
    multipartite_decompose,
    reconstruct,
    term_count,
)
from networks import (
    PlanarTree,
    build_binary_ttn,
    build_mps,
    build_planar_ttn,
    contract_to_dense,
    max_bond_dimension,
)
from oracle import build_dense, max_relative_error, schmidt_rank
from overlaps import homogeneous_mps_overlap, mps_overlap, ttn_overlap
from tensors import build_T, t_normalization

PREPARATION_TOL = 1e-9
OVERLAP_TOL = 1e-9


class CheckFailed(BetheError):
    pass


class CheckSkipped(BetheError):
    pass


@dataclass
class CheckContext:
    config: object
    level: str = "quick"
    artifact: object = None

    @property
    def data(self):
        return self.config.data

    @cached_property
    def oracle(self):
        return build_dense(self.data, self.config.N)


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""

    @property
    def passed(self):
        return self.status != "fail"


funcs = {}


def check(name, level="quick", real_theta_only=False, plane_waves_only=False):
    def decorator(func):
        def wrapper(ctx):
            if level == "full" and ctx.level != "full":
                return CheckResult(name, "skip", "runs with --level full")
            if real_theta_only and not ctx.data.real_theta:
                return CheckResult(name, "skip", "needs real scattering angles")
            if plane_waves_only and not ctx.data.plane_waves:
                return CheckResult(name, "skip", "needs plane-wave Bethe data")
            try:
                detail = func(ctx)
            except CheckSkipped as e:
                return CheckResult(name, "skip", str(e))
            except CheckFailed as e:
                log(name, f"failed: {e}")
                return CheckResult(name, "fail", str(e))
            except BetheError as e:
                log(name, f"error: {e}")
                return CheckResult(name, "fail", f"{type(e).__name__}: {e}")
            return CheckResult(name, "pass", detail or "")

        funcs[name] = wrapper
        return wrapper

    return decorator


def _expect_close(state, oracle, what):
    error = max_relative_error(state, oracle)
    if error > REL_TOL:
        raise CheckFailed(f"{what} differs from the oracle by {error:.3g}")
    return f"{what} matches the oracle (max relative error {error:.2g})"


@check("bipartite-decomposition")
def check_bipartite(ctx):
    N, M = ctx.config.N, ctx.data.M
    if N < 2:
        raise CheckSkipped("needs at least 2 sites")
    cuts = range(1, N) if ctx.level == "full" else [N // 2]
    for cut in cuts:
        terms = bipartite_decompose(ctx.data, LatticePartition.bipartition(N, cut))
        expected = term_count(M, (cut, N - cut))
        if len(terms) != expected:
            raise CheckFailed(f"cut {cut}: {len(terms)} terms, expected {expected}")
        _expect_close(reconstruct(terms, N), ctx.oracle, f"cut {cut} reconstruction")
    return f"{len(cuts)} cut(s) reconstruct the oracle"


@check("multipartite-decomposition")
def check_multipartite(ctx):
    partition = ctx.config.partition
    if partition.L > 4:
        # Cap the L^M walk at four parts
        N = ctx.config.N
        if N < 4:
            raise CheckSkipped("needs at least 4 sites")
        base, extra = divmod(N, 4)
        partition = LatticePartition([base + (1 if i < extra else 0) for i in range(4)])
    terms = multipartite_decompose(ctx.data, partition)
    expected = term_count(ctx.data.M, partition.parts)
    if len(terms) != expected:
        raise CheckFailed(f"{len(terms)} terms, expected {expected}")
    return _expect_close(reconstruct(terms, ctx.config.N), ctx.oracle, "multipartite sum")


@check("contiguous-decomposition")
def check_contiguous(ctx):
    ring = ctx.config.ring
    N = ctx.config.N
    if ring is None:
        if N < 3:
            raise CheckSkipped("needs a ring config or at least 3 sites")
        ring = RingPartition(N=N, left=1, middle=(N - 2,), right=1)
    terms = contiguous_decompose(ctx.data, ring)
    if len(terms) > ring.L ** ctx.data.M:
        raise CheckFailed(f"{len(terms)} terms exceeds L^M = {ring.L ** ctx.data.M}")
    return _expect_close(reconstruct(terms, N), ctx.oracle, "ring sum")


@check("schmidt-bound")
def check_schmidt(ctx):
    N, M = ctx.config.N, ctx.data.M
    if N < 2:
        raise CheckSkipped("needs at least 2 sites")
    cuts = range(1, N) if ctx.level == "full" else [N // 2]
    worst = 0
    for cut in cuts:
        rank = schmidt_rank(ctx.oracle, cut)
        worst = max(worst, rank)
        if rank > 2**M:
            raise CheckFailed(f"cut {cut} has Schmidt rank {rank} > 2^M = {2**M}")
    return f"largest Schmidt rank {worst} <= {2**M}"


@check("t-normalization", real_theta_only=True)
def check_t_normalization(ctx):
    T = build_T(ctx.data)
    gram = t_normalization(T)
    expected = np.diag([2.0 ** size(c) for c in T.domains[0]])
    if not np.allclose(gram, expected, rtol=0, atol=1e-12):
        raise CheckFailed("Σ_ab T^c_ab conj(T^c'_ab) is not diag(2^|c|)")
    return f"T normalization holds on {len(T.domains[0])} choices"


@check("network-mps")
def check_mps(ctx):
    net = build_mps(ctx.data, ctx.config.partition)
    if max_bond_dimension(net) > 2**ctx.data.M:
        raise CheckFailed(f"bond dimension {max_bond_dimension(net)} above 2^M")
    return _expect_close(contract_to_dense(net), ctx.oracle, "MPS")


@check("network-ttn")
def check_ttn(ctx):
    partition, done = ctx.config.partition, []
    L = partition.L
    if L & (L - 1) == 0:
        net = build_binary_ttn(ctx.data, partition)
        _expect_close(contract_to_dense(net), ctx.oracle, "binary TTN")
        done.append("binary")
    if ctx.config.tree is not None:
        net = build_planar_ttn(ctx.data, partition, ctx.config.tree)
        _expect_close(contract_to_dense(net), ctx.oracle, "planar TTN")
        done.append("planar")
    if not done:
        net = build_planar_ttn(ctx.data, partition, PlanarTree.star(L))
        _expect_close(contract_to_dense(net), ctx.oracle, "star TTN")
        done.append("star")
    return f"{', '.join(done)} tree(s) match the oracle"


@check("homogeneous-networks", plane_waves_only=True)
def check_homogeneous(ctx):
    partition = ctx.config.partition
    if not partition.is_uniform:
        raise CheckSkipped("needs equal parts")
    net = build_mps(ctx.data, partition, homogeneous=True)
    detail = _expect_close(contract_to_dense(net), ctx.oracle, "homogeneous MPS")
    L = partition.L
    if L & (L - 1) == 0:
        tree = build_binary_ttn(ctx.data, partition, homogeneous=True)
        detail = _expect_close(contract_to_dense(tree), ctx.oracle, "homogeneous MPS and TTN")
    return detail


@check("overlaps")
def check_overlaps(ctx):
    norm = float(np.vdot(ctx.oracle.amps, ctx.oracle.amps).real)
    net = build_mps(ctx.data, ctx.config.partition)
    values = {"dense": norm, "mps": mps_overlap(net, net)}
    L = ctx.config.partition.L
    if L & (L - 1) == 0:
        tree = build_binary_ttn(ctx.data, ctx.config.partition)
        values["ttn"] = ttn_overlap(tree, tree)
    if ctx.data.plane_waves and ctx.config.partition.is_uniform:
        homogeneous = build_mps(ctx.data, ctx.config.partition, homogeneous=True)
        values["transfer"] = homogeneous_mps_overlap(homogeneous, homogeneous)
    for method, value in values.items():
        if not is_close(value, norm, rel_tol=OVERLAP_TOL):
            raise CheckFailed(f"{method} norm² {value} disagrees with dense {norm}")
    return f"{', '.join(values)} agree on norm² {norm:.10g}"


@check("circuit-preparation", level="full", plane_waves_only=True)
def check_circuit(ctx):
    N, M = ctx.config.N, ctx.data.M
    if M > 0 and (N % M or (N // M) & (N // M - 1)):
        raise CheckSkipped(f"N={N} is not M times a power of two")
    fidelity = verify_preparation(ctx.data, N)
    if fidelity < 1 - PREPARATION_TOL:
        raise CheckFailed(f"fidelity {fidelity:.12f} below 1 - {PREPARATION_TOL}")
    return f"fidelity {fidelity:.12f}"


@check("artifact")
def check_artifact(ctx):
    if ctx.artifact is None:
        raise CheckSkipped("no --artifact given")
    return _expect_close(contract_to_dense(ctx.artifact), ctx.oracle, "stored network")


def run_checks(config, level="quick", artifact=None, jobs=1, names=None):
    ctx = CheckContext(config=config, level=level, artifact=artifact)
    # Materialize the shared oracle before fanning out
    ctx.oracle
    selected = [funcs[name] for name in (names or funcs)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            results = list(executor.map(lambda f: f(ctx), selected))
    else:
        results = [f(ctx) for f in selected]
    for result in results:
        log(result.name, f"{result.status} {result.detail}")
    return results
