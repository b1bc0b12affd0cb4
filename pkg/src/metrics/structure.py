"""Reciprocity, densities, degree sequences, k_nn curves and assortativity."""
import logging
from enum import Enum
from typing import Dict, List, Tuple

import numpy as np

from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)


class EmptyEdgeSet(ValueError):
    pass


class EmptyNodeSet(ValueError):
    pass


class UndefinedMetric(ValueError):
    """Raised when a metric has no value on the given graph (e.g. zero variance)."""


class Side(str, Enum):
    SOCIAL = "social"
    ATTRIBUTE = "attribute"


class DegreeKind(str, Enum):
    SOCIAL_OUT = "social_out"
    SOCIAL_IN = "social_in"
    ATTR_OF_SOCIAL = "attr_of_social"
    SOCIAL_OF_ATTR = "social_of_attr"


def reciprocity(g: SanGraph) -> float:
    """Fraction of social links (u, v) whose reverse link (v, u) also exists."""
    if g.n_social_links == 0:
        raise EmptyEdgeSet("reciprocity needs at least one social link")
    adjacency = g.social_csr()
    mutual = adjacency.multiply(adjacency.T).count_nonzero()
    return mutual / g.n_social_links


def social_density(g: SanGraph) -> float:
    if g.n_social == 0:
        raise EmptyNodeSet("social density needs at least one social node")
    return g.n_social_links / g.n_social


def attribute_density(g: SanGraph) -> float:
    if g.n_attribute == 0:
        raise EmptyNodeSet("attribute density needs at least one attribute node")
    return g.n_attribute_links / g.n_attribute


def degree_sequence(g: SanGraph, kind: DegreeKind) -> np.ndarray:
    kind = DegreeKind(kind)
    if kind == DegreeKind.SOCIAL_OUT:
        return g.out_degrees()
    if kind == DegreeKind.SOCIAL_IN:
        return g.in_degrees()
    if kind == DegreeKind.ATTR_OF_SOCIAL:
        return g.attribute_degrees()
    return g.member_counts()


def degree_histogram(g: SanGraph, kind: DegreeKind) -> Dict[int, int]:
    values, counts = np.unique(degree_sequence(g, kind), return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}


def _attribute_link_arrays(g: SanGraph) -> Tuple[np.ndarray, np.ndarray]:
    users = np.fromiter((u for u, _ in g.attribute_edges()), dtype=np.int64, count=g.n_attribute_links)
    attrs = np.fromiter((a for _, a in g.attribute_edges()), dtype=np.int64, count=g.n_attribute_links)
    return users, attrs


def _degree_pairs(g: SanGraph, side: Side) -> Tuple[np.ndarray, np.ndarray]:
    """(x, y) per link: (outdeg(src), indeg(dst)) or (social deg(a), attribute deg(u))."""
    if Side(side) == Side.SOCIAL:
        src, dst = g.edge_arrays()
        return g.out_degrees()[src], g.in_degrees()[dst]
    users, attrs = _attribute_link_arrays(g)
    return g.member_counts()[attrs], g.attribute_degrees()[users]


def knn_curve(g: SanGraph, side: Side) -> Dict[int, float]:
    """
    Mean neighbor degree as a function of node degree, averaged over links.

    social: outdegree k -> mean indegree of the targets of nodes with outdegree k.
    attribute: social degree k -> mean attribute degree of the members of attributes with social degree k.
    """
    x, y = _degree_pairs(g, side)
    if len(x) == 0:
        return {}
    keys, inverse = np.unique(x, return_inverse=True)
    sums = np.bincount(inverse, weights=y.astype(np.float64))
    counts = np.bincount(inverse)
    return {int(k): float(s / c) for k, s, c in zip(keys, sums, counts)}


def log_binned(curve: Dict[int, float], bins_per_decade: int = 10) -> List[Tuple[float, float]]:
    """Aggregate a degree-keyed curve into log-spaced bins: (geometric bin center, mean value)."""
    if not curve:
        return []
    degrees = np.array(sorted(k for k in curve if k > 0), dtype=np.float64)
    if len(degrees) == 0:
        return []
    values = np.array([curve[int(k)] for k in degrees])
    top = np.log10(degrees.max())
    edges = np.logspace(0, top + 1.0 / bins_per_decade, int(np.ceil(top * bins_per_decade)) + 2)
    which = np.digitize(degrees, edges) - 1
    binned = []
    for b in np.unique(which):
        mask = which == b
        binned.append((float(np.sqrt(edges[b] * edges[b + 1])), float(values[mask].mean())))
    return binned


def assortativity(g: SanGraph, side: Side) -> float:
    """Pearson correlation of the degree pairs at the two ends of every link."""
    x, y = _degree_pairs(g, side)
    if len(x) < 2:
        raise EmptyEdgeSet(f"{Side(side).value} assortativity needs at least two links")
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    dx, dy = x - x.mean(), y - y.mean()
    denominator = np.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    if denominator == 0:
        raise UndefinedMetric(f"{Side(side).value} assortativity is undefined: zero degree variance")
    r = float(np.dot(dx, dy) / denominator)
    return max(-1.0, min(1.0, r))
