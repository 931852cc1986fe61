# Every writer goes through common.dumps, so files come out canonical
from dataclasses import dataclass
from typing import Optional

import numpy as np

from common import (
    SCHEMA_VERSION,
    SchemaError,
    complex_from_json,
    complex_to_json,
    dumps,
    get_variables,
)
from bethe import BetheData, GeneralizedBetheData, LatticePartition, RingPartition, symbols
from circuit import QuantumCircuit, QuditGate
from networks import MatrixProductState, PlanarTree, TreeTensorNetwork
from oracle import DenseState
from tensors import FusedTensor, SiteBasisTensor, SparseChoiceTensor


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError("missing required field", field=f"{where}{key}")
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise SchemaError(f"expected an integer, got {value!r}", field=f"{where}{key}")
    if kind is list and not isinstance(value, list):
        raise SchemaError(f"expected a list, got {type(value).__name__}", field=f"{where}{key}")
    if kind is dict and not isinstance(value, dict):
        raise SchemaError(f"expected an object, got {type(value).__name__}", field=f"{where}{key}")
    return value


def _float(value, field):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"expected a number, got {value!r}", field=field)
    return float(value)


def _complex_rows(rows, width, field):
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != width:
            raise SchemaError(f"expected a row of {width} entries", field=f"{field}[{i}]")
    return np.array(
        [[complex_from_json(z, f"{field}[{i}]") for z in row] for i, row in enumerate(rows)],
        dtype=complex,
    ).reshape(len(rows), width)


def _pair_key(key, field):
    try:
        j2, j1 = (int(part) for part in key.split(","))
    except ValueError:
        raise SchemaError(f"theta keys look like 'j2,j1', got {key!r}", field=field)
    return (j2, j1)


# Bethe data


def bethe_to_json(data):
    if isinstance(data, GeneralizedBetheData):
        return {
            "M": data.M,
            "N": data.N,
            "phi": [[complex_to_json(z) for z in row] for row in data.phi],
            "theta": {f"{j2},{j1}": complex_to_json(v) for (j2, j1), v in data.theta.items()},
        }
    return {
        "M": data.M,
        "k": list(data.k),
        "theta": {f"{j2},{j1}": v for (j2, j1), v in data.theta.items()},
    }


def bethe_from_json(obj, kind="bethe", where="data."):
    M = _require(obj, "M", int, where)
    theta_obj = _require(obj, "theta", dict, where)
    if kind == "bethe":
        k = [_float(v, f"{where}k") for v in _require(obj, "k", list, where)]
        theta = {
            _pair_key(key, f"{where}theta"): _float(v, f"{where}theta.{key}")
            for key, v in theta_obj.items()
        }
        return BetheData(M=M, k=k, theta=theta)
    if kind == "generalized":
        N = _require(obj, "N", int, where)
        rows = _require(obj, "phi", list, where)
        if len(rows) != M:
            raise SchemaError(f"expected {M} rows, got {len(rows)}", field=f"{where}phi")
        phi = _complex_rows(rows, N, f"{where}phi")
        theta = {
            _pair_key(key, f"{where}theta"): complex_from_json(v, f"{where}theta.{key}")
            for key, v in theta_obj.items()
        }
        return GeneralizedBetheData(M=M, N=N, phi=phi, theta=theta)
    raise SchemaError(f"kind must be 'bethe' or 'generalized', got {kind!r}", field="kind")


# Configs


@dataclass(frozen=True, eq=False)
class Config:
    kind: str
    data: object
    N: int
    partition: LatticePartition
    tree: Optional[PlanarTree] = None
    ring: Optional[RingPartition] = None


def config_from_json(obj):
    version = _require(obj, "schema_version", int, "")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version}", field="schema_version")
    kind = obj.get("kind", "bethe")
    data = bethe_from_json(_require(obj, "data", dict, ""), kind)
    N = data.N if kind == "generalized" else _require(obj, "N", int, "")

    parts = obj.get("partition")
    if parts is None:
        partition = LatticePartition.single_sites(N)
    else:
        if not isinstance(parts, list) or not all(isinstance(p, int) for p in parts):
            raise SchemaError("expected a list of part sizes", field="partition")
        partition = LatticePartition(parts)
        if partition.N != N:
            raise SchemaError(f"parts cover {partition.N} sites, N={N}", field="partition")

    tree = None
    if obj.get("tree") is not None:
        tree = PlanarTree.from_nested(obj["tree"])

    ring = None
    if obj.get("ring") is not None:
        ring_obj = _require(obj, "ring", dict, "")
        left = _require(ring_obj, "left", int, "ring.")
        right = _require(ring_obj, "right", int, "ring.")
        middle = ring_obj.get("middle")
        if middle is None:
            middle = [1] * (N - left - right)
        ring = RingPartition(N=N, left=left, middle=tuple(middle), right=right)

    return Config(kind=kind, data=data, N=N, partition=partition, tree=tree, ring=ring)


def config_to_json(config):
    obj = {
        "schema_version": SCHEMA_VERSION,
        "kind": config.kind,
        "data": bethe_to_json(config.data),
        "partition": list(config.partition.parts),
    }
    if config.kind == "bethe":
        obj["N"] = config.N
    if config.tree is not None:
        obj["tree"] = config.tree.to_nested()
    if config.ring is not None:
        obj["ring"] = {
            "left": config.ring.left,
            "middle": list(config.ring.middle),
            "right": config.ring.right,
        }
    return obj


def load_config(filename):
    return config_from_json(get_variables(filename))


# Dense states and decomposition terms


def dense_to_json(state):
    obj = {
        "N": state.N,
        "M": state.M,
        "amps": [
            {"x": row, "re": float(a.real), "im": float(a.imag)}
            for row, a in zip(state.configs.tolist(), state.amps)
        ],
    }
    if state.sites != tuple(range(1, state.N + 1)):
        obj["sites"] = list(state.sites)
    return obj


def dense_from_json(obj):
    N = _require(obj, "N", int, "")
    M = _require(obj, "M", int, "")
    sites = obj.get("sites", list(range(1, N + 1)))
    rows, amps = [], []
    for i, entry in enumerate(_require(obj, "amps", list, "")):
        x = _require(entry, "x", list, f"amps[{i}].")
        if len(x) != M:
            raise SchemaError(f"expected {M} positions, got {len(x)}", field=f"amps[{i}].x")
        rows.append(x)
        amps.append(complex_from_json(entry, f"amps[{i}]"))
    return DenseState(tuple(sites), M, np.array(rows, dtype=int).reshape(len(rows), M), amps)


def terms_to_json(terms):
    return [
        {
            "choices": [list(symbols(c)) for c in term.choices],
            "coeff": complex_to_json(term.coefficient),
        }
        for term in terms
    ]


# Tensors


def _entry(idx, value):
    value = complex(value)
    return {"idx": list(idx), "re": value.real, "im": value.imag}


def _entries(obj, where):
    out = {}
    for i, entry in enumerate(_require(obj, "entries", list, where)):
        out[tuple(_require(entry, "idx", list, f"{where}entries[{i}]."))] = complex_from_json(
            entry, f"{where}entries[{i}]"
        )
    return out


def tensor_to_json(tensor):
    if isinstance(tensor, SparseChoiceTensor):
        return {
            "arity": tensor.arity,
            "domains": [list(d) for d in tensor.domains],
            "entries": [_entry(idx, v) for idx, v in sorted(tensor.entries.items())],
        }
    if isinstance(tensor, SiteBasisTensor):
        return {
            "arity": 2,
            "domains": [list(tensor.choice_domain)],
            "sites": list(tensor.sites),
            "entries": [_entry(idx, v) for idx, v in sorted(tensor.entries.items())],
        }
    return {
        "arity": 3,
        "domains": [list(tensor.left_domain), list(tensor.right_domain)],
        "sites": list(tensor.sites),
        "entries": [_entry(idx, v) for idx, v in sorted(tensor.entries.items())],
    }


def sparse_tensor_from_json(obj, where=""):
    domains = _require(obj, "domains", list, where)
    return SparseChoiceTensor(tuple(tuple(d) for d in domains), _entries(obj, where))


def site_tensor_from_json(obj, where=""):
    domains = _require(obj, "domains", list, where)
    sites = _require(obj, "sites", list, where)
    return SiteBasisTensor(tuple(domains[0]), tuple(sites), _entries(obj, where))


def fused_tensor_from_json(obj, where=""):
    domains = _require(obj, "domains", list, where)
    sites = _require(obj, "sites", list, where)
    if len(domains) != 2:
        raise SchemaError("fused tensors carry a left and a right domain", field=f"{where}domains")
    return FusedTensor(tuple(domains[0]), tuple(domains[1]), tuple(sites), _entries(obj, where))


# Networks


def network_to_json(net, config):
    obj = {
        "schema_version": SCHEMA_VERSION,
        "config": config_to_json(config),
        "homogeneous": net.homogeneous,
    }
    if isinstance(net, MatrixProductState):
        obj["kind"] = "mps"
        obj["bonds"] = [list(b) for b in net.bonds]
        obj["tensors"] = [tensor_to_json(t) for t in net.tensors]
    else:
        obj["kind"] = "ttn"
        obj["tree"] = net.tree.to_nested()
        obj["nodes"] = [
            {"path": list(path), "tensor": tensor_to_json(t)}
            for path, t in sorted(net.node_tensors.items())
        ]
        obj["leaves"] = [tensor_to_json(t) for t in net.leaf_tensors]
    return obj


def network_from_json(obj):
    version = _require(obj, "schema_version", int, "")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version}", field="schema_version")
    config = config_from_json(_require(obj, "config", dict, ""))
    homogeneous = bool(obj.get("homogeneous", False))
    kind = obj.get("kind")

    if kind == "mps":
        raw = _require(obj, "tensors", list, "")
        tensors = [fused_tensor_from_json(t, f"tensors[{i}].") for i, t in enumerate(raw)]
        if homogeneous and tensors:
            tensors = [tensors[0]] * len(tensors)
        bonds = tuple(tuple(b) for b in _require(obj, "bonds", list, ""))
        net = MatrixProductState(
            data=config.data,
            partition=config.partition,
            homogeneous=homogeneous,
            tensors=tuple(tensors),
            bonds=bonds,
        )
    elif kind == "ttn":
        tree = PlanarTree.from_nested(_require(obj, "tree", list, ""))
        node_tensors = {
            tuple(_require(node, "path", list, f"nodes[{i}].")): sparse_tensor_from_json(
                _require(node, "tensor", dict, f"nodes[{i}]."), f"nodes[{i}].tensor."
            )
            for i, node in enumerate(_require(obj, "nodes", list, ""))
        }
        leaves = tuple(
            site_tensor_from_json(t, f"leaves[{i}].")
            for i, t in enumerate(_require(obj, "leaves", list, ""))
        )
        layer_tensors, leaf_tensor = (), None
        if homogeneous:
            depth = tree.depth()
            layer_tensors = tuple(
                next(t for path, t in node_tensors.items() if len(path) == z) for z in range(depth)
            )
            node_tensors = {path: layer_tensors[len(path)] for path in node_tensors}
            leaf_tensor = leaves[0]
            leaves = (leaf_tensor,) * len(leaves)
        net = TreeTensorNetwork(
            data=config.data,
            partition=config.partition,
            homogeneous=homogeneous,
            tree=tree,
            node_tensors=node_tensors,
            leaf_tensors=leaves,
            layer_tensors=layer_tensors,
            leaf_tensor=leaf_tensor,
        )
    else:
        raise SchemaError(f"kind must be 'mps' or 'ttn', got {kind!r}", field="kind")
    return net, config


# Circuits


def circuit_to_json(circuit):
    return {
        "num_qudits": circuit.num_qudits,
        "D": circuit.D,
        "M": circuit.M,
        "N": circuit.N,
        "gates": [
            {
                "kind": g.kind,
                "layer": g.layer,
                "targets": list(g.targets),
                "orientation": g.orientation,
                "unitary": [[complex_to_json(z) for z in row] for row in g.unitary],
            }
            for g in circuit.gates
        ],
    }


def circuit_from_json(obj):
    gates = []
    for i, g in enumerate(_require(obj, "gates", list, "")):
        where = f"gates[{i}]."
        rows = _require(g, "unitary", list, where)
        unitary = _complex_rows(rows, len(rows), f"{where}unitary")
        gates.append(
            QuditGate(
                kind=_require(g, "kind", str, where),
                unitary=unitary,
                targets=tuple(_require(g, "targets", list, where)),
                layer=_require(g, "layer", int, where),
                orientation=g.get("orientation"),
            )
        )
    return QuantumCircuit(
        num_qudits=_require(obj, "num_qudits", int, ""),
        D=_require(obj, "D", int, ""),
        M=_require(obj, "M", int, ""),
        N=_require(obj, "N", int, ""),
        gates=gates,
    )


def write_json(filename, obj):
    with open(filename, "w") as f:
        f.write(dumps(obj))


def read_json(filename):
    return get_variables(filename)
