#!/usr/bin/env python3
import os
import sys
import time
import functools

import click
import numpy as np
from jinja2 import Environment, FileSystemLoader

from common import ABS_TOL, BetheError, complex_to_json, dumps, log
from bethe import LatticePartition, RingPartition
from bench import parse_grid, run_bench, write_csv
from checks import funcs as check_funcs, run_checks
from circuit import compile_circuit, simulate_statevector, verify_preparation
from decompose import (
    bipartite_decompose,
    contiguous_decompose,
    local_factor_rank,
    multipartite_decompose,
)
from networks import (
    PlanarTree,
    build_binary_ttn,
    build_mps,
    build_planar_ttn,
    max_bond_dimension,
    nonzero_count,
)
from oracle import build_dense, entanglement_entropy, schmidt_rank
from overlaps import METHODS, overlap
from serialize import (
    circuit_from_json,
    circuit_to_json,
    dense_from_json,
    dense_to_json,
    load_config,
    network_from_json,
    network_to_json,
    read_json,
    terms_to_json,
    write_json,
)

templates = Environment(
    loader=FileSystemLoader(os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates")),
    keep_trailing_newline=True,
)


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except BetheError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(1)

    return wrapper


def _emit(obj, output):
    if output:
        write_json(output, obj)
        log(None, f"wrote {output}")
    else:
        click.echo(dumps(obj), nl=False)


def _tree(config, tree_file):
    if tree_file:
        return PlanarTree.from_nested(read_json(tree_file))
    if config.tree is not None:
        return config.tree
    return PlanarTree.star(config.partition.L)


def _network(config, fmt, homogeneous=False, tree_file=None):
    if fmt == "mps":
        return build_mps(config.data, config.partition, homogeneous)
    if fmt == "ttn":
        return build_binary_ttn(config.data, config.partition, homogeneous)
    return build_planar_ttn(config.data, config.partition, _tree(config, tree_file))


def _load_state(filename, method):
    """A config, a stored network or a stored dense table, as `method` needs it."""
    obj = read_json(filename)
    if "amps" in obj:
        if method != "dense":
            raise BetheError(f"{filename} holds a dense table; use --method dense")
        return dense_from_json(obj)
    if "config" in obj and "kind" in obj and obj["kind"] in ("mps", "ttn"):
        net, _ = network_from_json(obj)
        return net
    config = load_config(filename)
    if method == "dense":
        return build_dense(config.data, config.N)
    if method == "ttn":
        return build_binary_ttn(config.data, config.partition)
    if method == "homogeneous-ttn":
        return build_binary_ttn(config.data, config.partition, homogeneous=True)
    if method == "transfer":
        return build_mps(config.data, config.partition, homogeneous=True)
    return build_mps(config.data, config.partition)


@click.group()
def main():
    """Bethe wavefunction tensor network tasks"""


@main.command("build", short_help="Build a dense table or a tensor network from a config")
@click.argument("config_path", type=click.Path(exists=True))
@click.option(
    "--format", "fmt", type=click.Choice(["dense", "mps", "ttn", "planar"]), default="mps"
)
@click.option("--tree", "tree_file", type=click.Path(exists=True), help="Nested-list tree JSON")
@click.option("--homogeneous", is_flag=True, help="Use shifted, position-independent tensors")
@click.option("--output", "-o", type=click.Path(), help="Write the artifact here")
@handle_errors
def build(config_path, fmt, tree_file, homogeneous, output):
    config = load_config(config_path)
    M, N = config.data.M, config.N
    if fmt == "dense":
        state = build_dense(config.data, N)
        _emit(dense_to_json(state), output)
        summary = {
            "bond_dimension": max((schmidt_rank(state, c) for c in range(1, N)), default=1),
            "nonzeros": int(np.count_nonzero(np.abs(state.amps) > ABS_TOL)),
            "total": len(state.amps),
        }
    else:
        net = _network(config, fmt, homogeneous, tree_file)
        _emit(network_to_json(net, config), output)
        summary = {"bond_dimension": max_bond_dimension(net), "nonzeros": nonzero_count(net)}

    click.echo(
        templates.get_template("build.txt").render(
            fmt=fmt,
            homogeneous=homogeneous,
            M=M,
            N=N,
            parts=config.partition.parts,
            bound=2**M,
            **summary,
        ),
        nl=False,
        err=True,
    )


@main.command("overlap", short_help="Overlap and fidelity of two states")
@click.argument("state_a", type=click.Path(exists=True))
@click.argument("state_b", type=click.Path(exists=True))
@click.option("--method", type=click.Choice(sorted(METHODS)), default="mps")
@handle_errors
def overlap_command(state_a, state_b, method):
    bra = _load_state(state_a, method)
    ket = _load_state(state_b, method)
    start = time.perf_counter()
    value = overlap(bra, ket, method)
    seconds = time.perf_counter() - start
    norm_bra = overlap(bra, bra, method).real
    norm_ket = overlap(ket, ket, method).real
    fidelity = 0.0
    if norm_bra > 0 and norm_ket > 0:
        fidelity = abs(value) ** 2 / (norm_bra * norm_ket)
    result = complex_to_json(value)
    result.update(
        {
            "method": method,
            "seconds": seconds,
            "norm_bra": norm_bra,
            "norm_ket": norm_ket,
            "fidelity": fidelity,
        }
    )
    click.echo(dumps(result), nl=False)


@main.command("schmidt", short_help="Schmidt rank and entanglement entropy at each cut")
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--cut", type=int, help="Only this cut (sites in the left part)")
@handle_errors
def schmidt(config_path, cut):
    config = load_config(config_path)
    state = build_dense(config.data, config.N)
    cuts = [cut] if cut else range(1, config.N)
    rows = [
        {
            "cut": c,
            "rank": schmidt_rank(state, c),
            "bound": 2**config.data.M,
            "entropy": entanglement_entropy(state, c),
        }
        for c in cuts
    ]
    click.echo(dumps(rows), nl=False)


@main.command("decompose", short_help="Fractal decomposition terms of a Bethe wavefunction")
@click.argument("config_path", type=click.Path(exists=True))
@click.option(
    "--kind",
    type=click.Choice(["bipartite", "multipartite", "contiguous"]),
    default="bipartite",
)
@click.option("--cut", type=int, help="Left part size for a bipartite decomposition")
@click.option("--output", "-o", type=click.Path(), help="Write the terms here")
@handle_errors
def decompose(config_path, kind, cut, output):
    config = load_config(config_path)
    if kind == "bipartite":
        partition = LatticePartition.bipartition(config.N, cut or config.N // 2)
        terms = bipartite_decompose(config.data, partition)
    elif kind == "multipartite":
        terms = multipartite_decompose(config.data, config.partition)
    else:
        ring = config.ring or RingPartition(
            N=config.N, left=1, middle=(config.N - 2,), right=1
        )
        terms = contiguous_decompose(config.data, ring)

    _emit(terms_to_json(terms), output)
    parts = len(terms[0].choices) if terms else 0
    ranks = [local_factor_rank(terms, i) for i in range(parts)]
    click.echo(f"{len(terms)} terms, local factor ranks per part: {ranks}", err=True)


@main.command("circuit", short_help="Compile the preparation circuit of a Bethe wavefunction")
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--output", "-o", type=click.Path(), help="Write the gate list here")
@click.option("--gates", "gates_file", type=click.Path(exists=True), help="Use a stored gate list")
@click.option("--simulate", is_flag=True, help="Also simulate; report output norm and fidelity")
@handle_errors
def circuit(config_path, output, gates_file, simulate):
    config = load_config(config_path)
    if gates_file:
        compiled = circuit_from_json(read_json(gates_file))
    else:
        compiled = compile_circuit(config.data, config.N)
    if output:
        write_json(output, circuit_to_json(compiled))
    norm = fidelity = None
    if simulate:
        psi = simulate_statevector(compiled)
        norm = float(np.linalg.norm(psi))
        fidelity = verify_preparation(config.data, config.N, compiled)
    click.echo(
        templates.get_template("circuit.txt").render(
            circuit=compiled,
            depth=compiled.depth,
            two_qudit=compiled.two_qudit_count(),
            per_layer=sorted(compiled.gates_per_layer().items()),
            output=output,
            norm=norm,
            fidelity=fidelity,
        ),
        nl=False,
    )


@main.command("verify", short_help="Run the verification suite on a config")
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--level", type=click.Choice(["quick", "full"]), default="quick")
@click.option("--artifact", type=click.Path(exists=True), help="Stored network to check")
@click.option("--check", "names", multiple=True, type=click.Choice(sorted(check_funcs)))
@click.option("--jobs", "-j", type=int, default=1, help="Checks to run concurrently")
@handle_errors
def verify(config_path, level, artifact, names, jobs):
    config = load_config(config_path)
    net = None
    if artifact:
        net, _ = network_from_json(read_json(artifact))
    results = run_checks(config, level=level, artifact=net, jobs=jobs, names=list(names) or None)
    click.echo(
        templates.get_template("verify.txt").render(
            config_path=config_path, level=level, M=config.data.M, N=config.N, results=results
        ),
        nl=False,
    )
    if not all(r.passed for r in results):
        sys.exit(1)


@main.command("bench", short_help="Time dense, MPS and transfer-matrix overlaps")
@click.option("--grid", default="M=1..3,N=16,64,256", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(), help="CSV file (default: stdout)")
@handle_errors
def bench(grid, seed, output):
    Ms, Ns = parse_grid(grid)
    rows = run_bench(Ms, Ns, seed)
    if output:
        with open(output, "w", newline="") as f:
            write_csv(rows, f)
        log(None, f"wrote {len(rows)} rows to {output}")
    else:
        write_csv(rows, sys.stdout)


if __name__ == "__main__":
    main()
