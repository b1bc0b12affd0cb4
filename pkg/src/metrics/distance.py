"""
Directed social distances, effective diameter and attribute distances.

Exact mode runs BFS (scipy.sparse.csgraph) from every or from sampled sources.
Probabilistic mode keeps a HyperLogLog counter per node and iterates
ball(u, h + 1) = {u} + union of ball(v, h) over out-links (u, v), which yields
the neighborhood function without materializing any distance.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse
from scipy.sparse.csgraph import shortest_path

from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)

EFFECTIVE_QUANTILE = 0.9
BFS_CHUNK = 256


class Unreachable(LookupError):
    pass


class EmptyAttribute(ValueError):
    pass


class NoFiniteDistances(ValueError):
    pass


class DiameterMode(str, Enum):
    EXACT = "exact"
    PROBABILISTIC = "probabilistic"


class DiameterConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    source_sample: Optional[int] = Field(None, ge=1, description="BFS sources for exact mode; None means all")
    registers: int = Field(64, ge=16, description="HyperLogLog registers per node (power of two)")
    tolerance: float = Field(1e-4, gt=0, description="stop when the neighborhood function grows by less")
    max_iterations: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)


def _bfs_rows(adjacency: sparse.csr_matrix, sources: np.ndarray) -> Dict[int, int]:
    hist: Dict[int, int] = {}
    dist = shortest_path(adjacency, method="D", directed=True, unweighted=True, indices=sources)
    finite = dist[np.isfinite(dist) & (dist > 0)].astype(np.int64)
    values, counts = np.unique(finite, return_counts=True)
    for d, c in zip(values, counts):
        hist[int(d)] = int(c)
    return hist


def distance_distribution(g: SanGraph, source_sample: Optional[int] = None, seed: int = 0,
                          workers: int = 1) -> Dict[int, int]:
    """
    Histogram of finite directed distances dist(u, v) > 0 from the chosen sources.
    :param source_sample: number of uniformly sampled sources; None (or >= n) runs every source.
    :return: distance -> number of ordered pairs.
    """
    n = g.n_social
    if source_sample is None or source_sample >= n:
        sources = np.arange(n, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=source_sample, replace=False))
    adjacency = g.social_csr()
    chunks = [sources[i:i + BFS_CHUNK] for i in range(0, len(sources), BFS_CHUNK)]
    hist: Dict[int, int] = {}
    # merged in chunk order so the histogram does not depend on the worker count
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for part in executor.map(lambda chunk: _bfs_rows(adjacency, chunk), chunks):
            for d, c in part.items():
                hist[d] = hist.get(d, 0) + c
    logger.debug(f"BFS from {len(sources)} sources found {sum(hist.values())} reachable pairs")
    return dict(sorted(hist.items()))


def effective_diameter_from_histogram(hist: Dict[int, float], quantile: float = EFFECTIVE_QUANTILE) -> float:
    """
    Interpolated quantile of a distance histogram: linear between the largest
    distance whose cumulative fraction is below the quantile and the next
    observed distance; the smallest distance when no fraction is below it.
    """
    items = sorted((d, c) for d, c in hist.items() if c > 0)
    if not items:
        raise NoFiniteDistances("no finite pairwise distance")
    distances = np.array([d for d, _ in items], dtype=np.float64)
    cumulative = np.cumsum([c for _, c in items], dtype=np.float64)
    cumulative /= cumulative[-1]
    below = np.flatnonzero(cumulative < quantile)
    if len(below) == 0:
        return float(distances[0])
    i = below[-1]
    if i + 1 >= len(distances):
        return float(distances[i])
    step = (quantile - cumulative[i]) / (cumulative[i + 1] - cumulative[i])
    return float(distances[i] + step * (distances[i + 1] - distances[i]))


# ----------------------------------------------------------------- sketches
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer over a uint64 array."""
    with np.errstate(over="ignore"):
        z = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
        return z ^ (z >> np.uint64(31))


def _bit_length(w: np.ndarray) -> np.ndarray:
    length = np.zeros(w.shape, dtype=np.int64)
    w = w.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        high = (w >> np.uint64(shift)) > 0
        length += high * shift
        w = np.where(high, w >> np.uint64(shift), w)
    return length + (w > 0)


def _initial_registers(n: int, registers: int, seed: int) -> np.ndarray:
    bits = int(math.log2(registers))
    with np.errstate(over="ignore"):
        keys = np.arange(n, dtype=np.uint64) ^ _mix64(np.array([seed], dtype=np.uint64))[0]
    hashed = _mix64(keys)
    index = (hashed & np.uint64(registers - 1)).astype(np.int64)
    rest = hashed >> np.uint64(bits)
    rho = (64 - bits) - _bit_length(rest) + 1
    counters = np.zeros((n, registers), dtype=np.uint8)
    counters[np.arange(n), index] = rho.astype(np.uint8)
    return counters


def _hll_estimates(counters: np.ndarray) -> np.ndarray:
    """Per-row HyperLogLog cardinality with the small-range correction."""
    m = counters.shape[1]
    alpha = 0.7213 / (1 + 1.079 / m) if m >= 128 else {16: 0.673, 32: 0.697, 64: 0.709}.get(m, 0.709)
    harmonic = np.power(2.0, -counters.astype(np.float64)).sum(axis=1)
    raw = alpha * m * m / harmonic
    zeros = (counters == 0).sum(axis=1)
    small = (raw <= 2.5 * m) & (zeros > 0)
    linear = m * np.log(m / np.maximum(zeros, 1))
    return np.where(small, linear, raw)


def approximate_distance_distribution(g: SanGraph, config: Optional[DiameterConfig] = None) -> Dict[int, float]:
    """Estimated number of ordered pairs at each distance h >= 1, from the sketched neighborhood function."""
    config = config or DiameterConfig()
    if config.registers & (config.registers - 1):
        raise ValueError("registers must be a power of two")
    n = g.n_social
    if n == 0:
        return {}
    src, dst = g.edge_arrays()
    counters = _initial_registers(n, config.registers, config.seed)
    previous = float(_hll_estimates(counters).sum())
    base = previous
    cumulative: List[float] = []
    for h in range(1, config.max_iterations + 1):
        updated = counters.copy()
        np.maximum.at(updated, src, counters[dst])
        changed = not np.array_equal(updated, counters)
        counters = updated
        current = max(float(_hll_estimates(counters).sum()), previous)
        cumulative.append(current - base)
        if not changed or current <= previous * (1.0 + config.tolerance):
            logger.debug(f"Neighborhood function converged after {h} iterations")
            break
        previous = current
    hist: Dict[int, float] = {}
    last = 0.0
    for h, value in enumerate(cumulative, start=1):
        if value - last > 0:
            hist[h] = value - last
        last = max(last, value)
    return hist


def effective_diameter(g: SanGraph, mode: DiameterMode = DiameterMode.EXACT,
                       config: Optional[DiameterConfig] = None) -> float:
    """
    Interpolated 90th percentile of finite directed distances.
    :raises NoFiniteDistances: when no pair of distinct nodes is connected.
    """
    config = config or DiameterConfig()
    if DiameterMode(mode) == DiameterMode.EXACT:
        hist = distance_distribution(g, config.source_sample, config.seed, config.workers)
    else:
        hist = approximate_distance_distribution(g, config)
    return effective_diameter_from_histogram(hist)


# ------------------------------------------------------- attribute distances
def _distances_from_members(g: SanGraph, a: int) -> np.ndarray:
    """1 + multi-source distance from the members of a, via a virtual source linked to each member."""
    members = g.members(a)
    if not members:
        raise EmptyAttribute(f"attribute node {a} has no members")
    n = g.n_social
    row = sparse.csr_matrix(
        (np.ones(len(members), dtype=np.int8), (np.zeros(len(members), dtype=np.int64), members)),
        shape=(1, n + 1),
    )
    body = sparse.hstack([g.social_csr(), sparse.csr_matrix((n, 1), dtype=np.int8)])
    augmented = sparse.vstack([body, row]).tocsr()
    dist = shortest_path(augmented, method="D", directed=True, unweighted=True, indices=n)
    return dist[:n]


def attribute_distance(g: SanGraph, a: int, b: int) -> int:
    """min{dist(u, v) : u member of a, v member of b} + 1."""
    if not g.members(b):
        raise EmptyAttribute(f"attribute node {b} has no members")
    dist = _distances_from_members(g, a)
    best = dist[np.asarray(g.members(b), dtype=np.int64)].min()
    if not np.isfinite(best):
        raise Unreachable(f"no directed social path from members of {a} to members of {b}")
    return int(best)


def attribute_distance_distribution(g: SanGraph, source_sample: Optional[int] = None,
                                    seed: int = 0) -> Dict[int, int]:
    """Histogram of finite attribute distances over ordered pairs (a, b), a != b, from sampled sources a."""
    candidates = np.flatnonzero(g.member_counts() > 0)
    if source_sample is not None and source_sample < len(candidates):
        rng = np.random.default_rng(seed)
        candidates = np.sort(rng.choice(candidates, size=source_sample, replace=False))
    users = np.fromiter((u for u, _ in g.attribute_edges()), dtype=np.int64, count=g.n_attribute_links)
    attrs = np.fromiter((x for _, x in g.attribute_edges()), dtype=np.int64, count=g.n_attribute_links)
    hist: Dict[int, int] = {}
    for a in candidates:
        dist = _distances_from_members(g, int(a))
        best = np.full(g.n_attribute, np.inf)
        np.minimum.at(best, attrs, dist[users])
        best[a] = np.inf
        finite = best[np.isfinite(best)].astype(np.int64)
        for d, c in zip(*np.unique(finite, return_counts=True)):
            hist[int(d)] = hist.get(int(d), 0) + int(c)
    return dict(sorted(hist.items()))


def attribute_effective_diameter(g: SanGraph, source_sample: Optional[int] = None, seed: int = 0) -> float:
    return effective_diameter_from_histogram(attribute_distance_distribution(g, source_sample, seed))
