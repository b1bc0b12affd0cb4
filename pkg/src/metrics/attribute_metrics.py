"""Attribute-aware link metrics: reciprocation by shared neighbors, degree percentiles per attribute value."""
import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import numpy as np

from utils.san_graph import (
    NonMonotoneSnapshots,
    SanGraph,
    common_attribute_count,
    common_social_neighbor_count,
    is_subgraph,
)

logger = logging.getLogger(__name__)


def reciprocity_grid(g_half: SanGraph, g_final: SanGraph, cap: Optional[int] = None) -> Dict[Tuple[int, int], float]:
    """
    r_{s,a}: share of one-directional links of g_half that became mutual in g_final,
    bucketed by (common social neighbors s, common attributes a) measured in g_half.
    :param cap: merge all buckets above cap into cap (per coordinate).
    :raises NonMonotoneSnapshots: when g_half is not contained in g_final.
    """
    if not is_subgraph(g_half, g_final):
        raise NonMonotoneSnapshots("halfway snapshot is not contained in the final snapshot")
    totals: Dict[Tuple[int, int], int] = defaultdict(int)
    reciprocated: Dict[Tuple[int, int], int] = defaultdict(int)
    for u, v in g_half.social_edges():
        if g_half.has_social_link(v, u):
            continue
        s = common_social_neighbor_count(g_half, u, v)
        a = common_attribute_count(g_half, u, v)
        if cap is not None:
            s, a = min(s, cap), min(a, cap)
        totals[(s, a)] += 1
        src = g_final.social_id(g_half.social_label(u))
        dst = g_final.social_id(g_half.social_label(v))
        if g_final.has_social_link(dst, src):
            reciprocated[(s, a)] += 1
    logger.debug(f"Reciprocity grid over {sum(totals.values())} one-directional links")
    return {key: reciprocated[key] / totals[key] for key in sorted(totals)}


def degree_percentiles_by_attribute_value(g: SanGraph, attr_type: str,
                                          top_k: int = 10) -> List[Tuple[str, int, float, float, float]]:
    """
    For the top_k values of attr_type by membership: (value, members, p25, median, p75)
    of the members' social outdegree, with linear (inclusive) interpolation.
    """
    if attr_type not in g.attribute_types:
        raise ValueError(f"unknown attribute type {attr_type!r}")
    out_degrees = g.out_degrees()
    nodes = [a for a in g.attributes_of_type(attr_type) if g.members(a)]
    nodes.sort(key=lambda a: (-len(g.members(a)), g.attribute_label(a)[1]))
    rows = []
    for a in nodes[:top_k]:
        degrees = out_degrees[np.asarray(g.members(a), dtype=np.int64)]
        p25, p50, p75 = np.percentile(degrees, [25, 50, 75], method="linear")
        rows.append((g.attribute_label(a)[1], len(degrees), float(p25), float(p50), float(p75)))
    return rows
