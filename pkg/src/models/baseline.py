"""
Zhel-style co-evolution baseline, reconstructed from its description.

The co-evolution model links users by preferential attachment and
triangle closing and lets users join groups by copying them from friends. This
stand-in extends it to directed links and keeps the properties it is compared on:

- arrivals link by plain PA; woken nodes close triangles with RR over social links only
- lifetimes are exponential, which makes the social outdegree power-law
  (P(D > x) ~ x^(-m_s / lifetime_mean)) instead of lognormal
- attributes are acquired dynamically: at arrival and on every wake a node
  copies an attribute from a random social neighbor, or founds a new one
"""
import heapq
import logging
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from models.attachment import AttachmentSampler, NoCandidate
from models.closure import closure_select
from models.params import Attachment, Closure, GenParams
from utils.san_graph import DEFAULT_ATTRIBUTE_TYPES, Event, EventLog, LinkOrigin, SanGraph

logger = logging.getLogger(__name__)


class ZhelParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    T: int = Field(1000, ge=0)
    lifetime_mean: float = Field(0.5, gt=0, description="mean of the exponential lifetime")
    m_s: float = Field(1.0, gt=0)
    p_new_group: float = Field(0.2, ge=0, le=1, description="probability that an adoption founds a new attribute")
    p_adopt: float = Field(0.5, ge=0, le=1, description="probability that a wake also adopts an attribute")
    init_social: int = Field(5, ge=2)
    init_attr: int = Field(5, ge=0)
    attribute_types: Tuple[str, ...] = DEFAULT_ATTRIBUTE_TYPES

    def powerlaw_outdegree_exponent(self) -> float:
        """pmf exponent of the outdegree tail implied by the lifetime/sleep laws."""
        return 1.0 + self.m_s / self.lifetime_mean


def _adopt(g: SanGraph, u: int, rng: np.random.Generator, params: ZhelParams) -> int:
    """Copy an attribute from a random social neighbor; found a new one otherwise. Returns -1 on no-op."""
    neighbors = g.neighbor_list(u)
    if neighbors and rng.random() >= params.p_new_group:
        w = neighbors[int(rng.integers(len(neighbors)))]
        offered = [a for a in g.attribute_list(w) if a not in g.attribute_set(u)]
        if offered:
            a = offered[int(rng.integers(len(offered)))]
            g.add_attribute_link(u, a)
            return a
        return -1
    types = params.attribute_types
    a = g.add_attribute_node(types[int(rng.integers(len(types)))])
    g.add_attribute_link(u, a)
    return a


def generate_baseline_zhel(params_z: ZhelParams, seed: int) -> Tuple[SanGraph, EventLog]:
    """
    Run the baseline for params_z.T steps under the given seed.
    :return: frozen graph and its event log (same event conventions as the main generator).
    """
    rng = np.random.default_rng(seed)
    g = SanGraph(params_z.attribute_types)
    log = EventLog()
    # PA attachment and RR closure; the remaining fields are unused by those variants
    rules = GenParams(attachment=Attachment.PA, closure=Closure.RR, beta=0.0, seed=seed,
                      attribute_types=params_z.attribute_types)

    users = [g.add_social_node() for _ in range(params_z.init_social)]
    for u in users:
        log.append(Event.arrive(0.0, g.social_label(u)))
    attrs = [g.add_attribute_node(params_z.attribute_types[i % len(params_z.attribute_types)])
             for i in range(params_z.init_attr)]
    for u in users:
        for a in attrs:
            g.add_attribute_link(u, a)
            log.append(Event.alink(0.0, g.social_label(u), *g.attribute_label(a)))
    for u in users:
        for v in users:
            if u != v:
                g.add_social_link(u, v)
                log.append(Event.slink(0.0, g.social_label(u), g.social_label(v), LinkOrigin.INIT))

    sampler = AttachmentSampler(g, rules)
    heap: List[Tuple[float, int, int]] = []
    death: Dict[int, float] = {}
    outdegree: Dict[int, int] = {}
    seq = 0

    def adopt(u: int, t: float) -> None:
        a = _adopt(g, u, rng, params_z)
        if a >= 0:
            sampler.add_member(a, u)
            log.append(Event.alink(t, g.social_label(u), *g.attribute_label(a)))

    def schedule(u: int, wake: float) -> None:
        nonlocal seq
        if wake <= death[u]:
            heapq.heappush(heap, (wake, seq, u))
            seq += 1

    for step in range(1, params_z.T + 1):
        t = float(step - 1)
        u = g.add_social_node()
        sampler.add_social(u)
        log.append(Event.arrive(t, g.social_label(u)))
        v = sampler.select(u, rng)
        g.add_social_link(u, v)
        sampler.indegree_changed(v)
        log.append(Event.slink(t, g.social_label(u), g.social_label(v), LinkOrigin.FIRST))
        adopt(u, t)

        death[u] = t + float(rng.exponential(params_z.lifetime_mean))
        outdegree[u] = 1
        schedule(u, t + float(rng.exponential(params_z.m_s)))

        while heap and heap[0][0] <= step:
            wake, _, w = heapq.heappop(heap)
            try:
                v = closure_select(g, w, rules, rng)
            except NoCandidate:
                logger.debug(f"Baseline wake of node {w} produced no link")
            else:
                g.add_social_link(w, v)
                sampler.indegree_changed(v)
                log.append(Event.slink(wake, g.social_label(w), g.social_label(v), LinkOrigin.CLOSURE))
                outdegree[w] += 1
            if rng.random() < params_z.p_adopt:
                adopt(w, wake)
            schedule(w, wake + float(rng.exponential(params_z.m_s / outdegree[w])))

    logger.info(f"Baseline generated {g.n_social} social nodes, {g.n_social_links} social links, "
                f"{g.n_attribute} attribute nodes")
    return g.freeze(), log
