import re
import csv
import time

import numpy as np

from common import BetheError, OracleBoundError, log
from bethe import LatticePartition, random_bethe
from networks import build_mps
from oracle import build_dense_bethe, inner_product
from overlaps import ContractionStats, homogeneous_mps_overlap, mps_overlap

HEADERS = ["M", "N", "method", "seconds", "re", "im", "multiplies"]


def parse_grid(text):
    """
    "M=1..3,N=16,64,256" -> ([1, 2, 3], [16, 64, 256]). Values are either an
    inclusive range a..b or a comma separated list.
    """
    grid = {}
    for token in re.split(r",(?=[A-Za-z]+=)", text.strip()):
        if "=" not in token:
            raise BetheError(f"grid entries look like M=1..3, got {token!r}")
        key, value = token.split("=", 1)
        key = key.strip()
        try:
            if ".." in value:
                lo, hi = value.split("..", 1)
                values = list(range(int(lo), int(hi) + 1))
            else:
                values = [int(v) for v in value.split(",") if v.strip()]
        except ValueError:
            raise BetheError(f"{key} values must be integers, got {value!r}")
        grid[key] = values
    if set(grid) != {"M", "N"}:
        raise BetheError(f"grid needs exactly M and N, got {sorted(grid)}")
    return grid["M"], grid["N"]


def _timed(func):
    start = time.perf_counter()
    value = func()
    return value, time.perf_counter() - start


def bench_point(data, N):
    rows = []
    partition = LatticePartition.single_sites(N)

    try:
        value, seconds = _timed(
            lambda: inner_product(build_dense_bethe(data, N), build_dense_bethe(data, N))
        )
        rows.append(("dense", value, seconds, ""))
    except OracleBoundError as e:
        log("bench", f"dense skipped for M={data.M}, N={N}: {e}")

    net = build_mps(data, partition)
    stats = ContractionStats()
    value, seconds = _timed(lambda: mps_overlap(net, net, stats))
    rows.append(("mps", value, seconds, stats.total))

    homogeneous = build_mps(data, partition, homogeneous=True)
    stats = ContractionStats()
    value, seconds = _timed(lambda: homogeneous_mps_overlap(homogeneous, homogeneous, stats=stats))
    rows.append(("transfer", value, seconds, stats.matrix_products))

    return [
        {
            "M": data.M,
            "N": N,
            "method": method,
            "seconds": f"{seconds:.6f}",
            "re": repr(float(np.real(value))),
            "im": repr(float(np.imag(value))),
            "multiplies": multiplies,
        }
        for method, value, seconds, multiplies in rows
    ]


def run_bench(Ms, Ns, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for M in Ms:
        data = random_bethe(M, rng)
        for N in Ns:
            if N < M:
                continue
            log("bench", f"M={M}, N={N}")
            rows.extend(bench_point(data, N))
    return rows


def write_csv(rows, f):
    writer = csv.DictWriter(f, fieldnames=HEADERS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
