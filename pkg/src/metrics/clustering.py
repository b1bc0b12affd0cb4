"""
Clustering coefficients of social and attribute nodes.

c(x) = L(x) / (k (k - 1)) where Gamma(x) is the social neighbor set of x
(for an attribute node: its members), k = |Gamma(x)| and L(x) counts the
directed social links among Gamma(x), each direction separately.
Nodes with k < 2 contribute c = 0 and still count in averages.
"""
import logging
import math
from typing import Dict, Iterable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field
from scipy import sparse

from metrics.structure import EmptyNodeSet, Side
from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)


class ApproxConfig(BaseModel):
    """Additive error epsilon holds with probability at least 1 - 1/nu."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(0.002, gt=0)
    nu: float = Field(100.0, gt=1)
    seed: int = Field(0, ge=0)

    @computed_field
    @property
    def samples(self) -> int:
        return max(1, math.ceil(math.log(2 * self.nu) / (2 * self.epsilon ** 2)))


def _membership(g: SanGraph) -> sparse.csr_matrix:
    """n_attribute x n_social 0/1 matrix of attribute links."""
    users = np.fromiter((u for u, _ in g.attribute_edges()), dtype=np.int64, count=g.n_attribute_links)
    attrs = np.fromiter((a for _, a in g.attribute_edges()), dtype=np.int64, count=g.n_attribute_links)
    matrix = sparse.csr_matrix((np.ones(len(users), dtype=np.int64), (attrs, users)),
                               shape=(g.n_attribute, g.n_social))
    matrix.sort_indices()
    return matrix


def _neighborhoods(g: SanGraph, side: Side) -> sparse.csr_matrix:
    if Side(side) == Side.SOCIAL:
        return g.neighbor_csr().astype(np.int64)
    return _membership(g)


def clustering_values(g: SanGraph, side: Side = Side.SOCIAL) -> np.ndarray:
    """c(x) for every node of the given side."""
    neighborhoods = _neighborhoods(g, side)
    adjacency = g.social_csr().astype(np.int64)
    links = np.asarray((neighborhoods @ adjacency).multiply(neighborhoods).sum(axis=1)).ravel()
    k = np.diff(neighborhoods.indptr).astype(np.float64)
    values = np.zeros(len(k))
    defined = k >= 2
    values[defined] = links[defined] / (k[defined] * (k[defined] - 1))
    return values


def _node_array(g: SanGraph, side: Side, node_set: Optional[Iterable[int]]) -> np.ndarray:
    size = g.n_social if Side(side) == Side.SOCIAL else g.n_attribute
    nodes = np.arange(size, dtype=np.int64) if node_set is None else np.fromiter(node_set, dtype=np.int64)
    if len(nodes) == 0:
        raise EmptyNodeSet(f"no {Side(side).value} nodes to average over")
    if nodes.min() < 0 or nodes.max() >= size:
        raise EmptyNodeSet(f"node set refers to unknown {Side(side).value} nodes")
    return nodes


def clustering_exact(g: SanGraph, node_set: Optional[Iterable[int]] = None, side: Side = Side.SOCIAL) -> float:
    """
    Mean clustering coefficient over node_set (all nodes of the side when None).
    :raises EmptyNodeSet: for an empty node set.
    """
    nodes = _node_array(g, side, node_set)
    return float(clustering_values(g, side)[nodes].mean())


def clustering_approx(g: SanGraph, node_set: Optional[Iterable[int]] = None, config: Optional[ApproxConfig] = None,
                      side: Side = Side.SOCIAL) -> float:
    """
    Sampled estimate of clustering_exact.

    Each of K samples draws a center uniformly from node_set and an unordered
    pair {v, w} of its neighbors; F = [v -> w] + [w -> v]. The estimate is
    sum(F) / (2K), within epsilon of the exact mean with probability >= 1 - 1/nu.
    """
    config = config or ApproxConfig()
    nodes = _node_array(g, side, node_set)
    rng = np.random.default_rng(config.seed)
    neighborhoods = _neighborhoods(g, side)
    indptr, indices = neighborhoods.indptr, neighborhoods.indices
    K = config.samples

    centers = nodes[rng.integers(len(nodes), size=K)]
    degrees = indptr[centers + 1] - indptr[centers]
    usable = degrees >= 2
    centers, degrees = centers[usable], degrees[usable]
    first = np.floor(rng.random(len(centers)) * degrees).astype(np.int64)
    second = np.floor(rng.random(len(centers)) * (degrees - 1)).astype(np.int64)
    second += second >= first
    v = indices[indptr[centers] + first].astype(np.int64)
    w = indices[indptr[centers] + second].astype(np.int64)

    src, dst = g.edge_arrays()
    n = max(g.n_social, 1)
    keys = src * n + dst  # sorted: edges come out in (src, dst) order

    def has_link(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        wanted = a * n + b
        pos = np.searchsorted(keys, wanted)
        found = pos < len(keys)
        found[found] = keys[pos[found]] == wanted[found]
        return found

    closed = has_link(v, w).astype(np.int64) + has_link(w, v).astype(np.int64)
    logger.debug(f"Clustering sampler drew {K} triples ({len(centers)} with a resolvable pair)")
    return float(closed.sum() / (2.0 * K))


def _degrees(g: SanGraph, side: Side) -> np.ndarray:
    return g.neighbor_degrees() if Side(side) == Side.SOCIAL else g.member_counts()


def clustering_by_degree(g: SanGraph, side: Side = Side.SOCIAL, config: Optional[ApproxConfig] = None) -> Dict[int, float]:
    """
    Mean clustering coefficient per node degree; exact when config is None,
    otherwise the sampler restricted to each degree class.
    """
    degrees = _degrees(g, side)
    classes = np.unique(degrees)
    if config is None:
        values = clustering_values(g, side)
        return {int(k): float(values[degrees == k].mean()) for k in classes}
    return {
        int(k): clustering_approx(g, np.flatnonzero(degrees == k), config, side)
        for k in classes
    }


def per_attribute_type_clustering(g: SanGraph) -> Dict[str, float]:
    """Mean attribute clustering per attribute type; types without nodes are omitted."""
    values = clustering_values(g, Side.ATTRIBUTE)
    result = {}
    for attr_type in g.attribute_types:
        nodes = g.attributes_of_type(attr_type)
        if nodes:
            result[attr_type] = float(values[np.asarray(nodes, dtype=np.int64)].mean())
    return result
