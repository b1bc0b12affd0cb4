"""
Triangle-closing target selection for woken nodes.

    Baseline: uniform over the 2-hop social neighborhood of u
    RR:       uniform w in Gamma_s(u), then uniform v in Gamma_s(w)
    RR-SAN:   w in Gamma_s(u) (weight 1 each) or Gamma_a(u) (weight fc each),
              then uniform v among the social neighbors of w
"""
import logging
from collections import defaultdict
from typing import Dict, Set

import numpy as np

from models.attachment import NoCandidate
from models.params import Closure, GenParams
from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)

CLOSURE_RETRIES = 16


def two_hop_neighborhood(g: SanGraph, u: int) -> Set[int]:
    reach = set(g.neighbor_list(u))
    for w in g.neighbor_list(u):
        reach.update(g.neighbor_list(w))
    reach.discard(u)
    return reach


def closure_distribution(g: SanGraph, u: int, closure: Closure, fc: float = 1.0) -> Dict[int, float]:
    """
    Probability of each target v of one unconstrained draw, by enumerating
    first-hop/second-hop paths. Mass may fall on u itself or on existing targets.
    """
    probs: Dict[int, float] = defaultdict(float)
    social = g.neighbor_list(u)
    if closure == Closure.BASELINE:
        reach = two_hop_neighborhood(g, u)
        for v in reach:
            probs[v] = 1.0 / len(reach)
        return dict(probs)

    attrs = g.attribute_list(u) if closure == Closure.RRSAN else []
    total = len(social) + fc * len(attrs)
    if total <= 0:
        return {}
    for w in social:
        second = g.neighbor_list(w)
        share = 1.0 / (total * len(second))
        for v in second:
            probs[v] += share
    if fc > 0:
        for a in attrs:
            members = g.members(a)
            share = fc / (total * len(members))
            for v in members:
                probs[v] += share
    return dict(probs)


def eligible_distribution(g: SanGraph, u: int, closure: Closure, fc: float = 1.0) -> Dict[int, float]:
    """closure_distribution conditioned on v != u and (u, v) not yet present."""
    raw = closure_distribution(g, u, closure, fc)
    targets = g.out_set(u)
    kept = {v: p for v, p in raw.items() if v != u and v not in targets}
    mass = sum(kept.values())
    if mass <= 0:
        return {}
    return {v: p / mass for v, p in kept.items()}


def _draw_once(g: SanGraph, u: int, closure: Closure, fc: float, rng: np.random.Generator) -> int:
    social = g.neighbor_list(u)
    if closure == Closure.BASELINE:
        reach = sorted(two_hop_neighborhood(g, u))
        if not reach:
            raise NoCandidate(f"social node {u} has an empty 2-hop neighborhood")
        return reach[int(rng.integers(len(reach)))]

    attrs = g.attribute_list(u) if closure == Closure.RRSAN and fc > 0 else []
    total = len(social) + fc * len(attrs)
    if total <= 0:
        raise NoCandidate(f"social node {u} has no neighbor to close through")
    r = rng.random() * total
    if r < len(social):
        second = g.neighbor_list(social[int(r)])
    else:
        index = min(int((r - len(social)) / fc), len(attrs) - 1)
        second = g.members(attrs[index])
    return second[int(rng.integers(len(second)))]


def closure_select(g: SanGraph, u: int, params: GenParams, rng: np.random.Generator) -> int:
    """
    Target of a woken node's outgoing link.
    :raises NoCandidate: when every draw within the retry budget hits u or an existing target.
    """
    for _ in range(CLOSURE_RETRIES + 1):
        v = _draw_once(g, u, params.closure, params.fc, rng)
        if v != u and v not in g.out_set(u):
            return v
    raise NoCandidate(f"closure retry budget exhausted for social node {u}")
