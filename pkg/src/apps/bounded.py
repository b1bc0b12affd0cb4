"""Degree-bounded undirected view of the social graph used by the security applications."""
import logging
from typing import Union

import networkx as nx
import numpy as np

from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)


def symmetrized(g: SanGraph) -> nx.Graph:
    """Undirected social graph over every social id; a reciprocal pair becomes one edge."""
    view = nx.Graph()
    view.add_nodes_from(range(g.n_social))
    view.add_edges_from(g.social_edges())
    return view


def degree_bounded_view(g: Union[SanGraph, nx.Graph], bound: int, seed: int = 0) -> nx.Graph:
    """
    Symmetrize and cap every node degree at bound.

    Nodes are visited in id order; a node above the bound keeps a uniformly
    random subset of `bound` of its current edges. Trimming only lowers the
    degrees of nodes visited earlier, so one pass suffices.
    """
    if bound < 1:
        raise ValueError(f"degree bound must be >= 1, got {bound}")
    view = symmetrized(g) if isinstance(g, SanGraph) else nx.Graph(g)
    rng = np.random.default_rng(seed)
    removed = 0
    for node in sorted(view.nodes):
        degree = view.degree(node)
        if degree <= bound:
            continue
        neighbors = sorted(view.neighbors(node))
        drop = rng.choice(len(neighbors), size=degree - bound, replace=False)
        view.remove_edges_from((node, neighbors[i]) for i in drop)
        removed += degree - bound
    if removed:
        logger.debug(f"Degree bound {bound} removed {removed} edges")
    return view
