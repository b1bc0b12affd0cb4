"""
Stochastic SAN evolution model.

Each step: one social node arrives, samples a lognormal number of attributes
and links to attribute nodes (new with probability p, otherwise chosen in
proportion to social degree), issues its first outgoing link via the
attachment model, samples a truncated-normal lifetime and an exponential
sleep with mean m_s / d_o. Nodes whose wake time falls inside the step issue
one triangle-closing link each and go back to sleep until their lifetime ends.
"""
import heapq
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.attachment import AttachmentSampler, NoCandidate
from models.closure import closure_select
from models.params import GenParams
from models.sampling import FenwickSampler
from utils.san_graph import (
    DEFAULT_ATTRIBUTE_TYPES,
    Event,
    EventLog,
    LinkOrigin,
    SanGraph,
)

logger = logging.getLogger(__name__)

ATTRIBUTE_RESAMPLES = 64


class InvalidDegree(ValueError):
    pass


@dataclass
class NodeState:
    arrival: float
    lifetime: float
    wake_time: float
    outdegree: int

    @property
    def death(self) -> float:
        return self.arrival + self.lifetime


def sample_attribute_degree(params: GenParams, rng: np.random.Generator) -> int:
    """n_a = max(1, round(exp(Normal(mu_a, sigma_a))))."""
    draw = math.exp(rng.normal(params.mu_a, params.sigma_a))
    return max(1, int(math.floor(draw + 0.5)))


def sample_lifetime(params: GenParams, rng: np.random.Generator) -> float:
    return float(params.lifetime().sample(rng))


def sample_sleep(params: GenParams, d_o: int, rng: np.random.Generator) -> float:
    """Exponential sleep time with mean m_s / d_o."""
    if d_o < 1:
        raise InvalidDegree(f"sleep time needs outdegree >= 1, got {d_o}")
    return float(rng.exponential(params.m_s / d_o))


def _new_attribute(g: SanGraph, rng: np.random.Generator, attribute_types: Sequence[str]) -> int:
    attr_type = attribute_types[int(rng.integers(len(attribute_types)))]
    return g.add_attribute_node(attr_type)


def attribute_link_step(g: SanGraph, u: int, rng: np.random.Generator, p: float,
                        attribute_types: Sequence[str] = DEFAULT_ATTRIBUTE_TYPES,
                        degree_sampler: Optional[FenwickSampler] = None) -> int:
    """
    Link u to one attribute node and return it.

    With probability p (or when no attribute node has members yet) a fresh
    attribute node of a uniformly drawn type is created; otherwise an existing
    node is drawn in proportion to its social degree, redrawing when u already has it.
    :param degree_sampler: Fenwick tree of member counts kept in sync by the caller;
        computed from the graph when omitted.
    """
    create = g.n_attribute == 0 or rng.random() < p
    if not create:
        total = degree_sampler.total if degree_sampler is not None else float(g.n_attribute_links)
        create = total <= 0

    if not create:
        owned = g.attribute_set(u)
        chosen = None
        if degree_sampler is not None:
            for _ in range(ATTRIBUTE_RESAMPLES):
                a = degree_sampler.sample(rng)
                if a not in owned:
                    chosen = a
                    break
        if chosen is None:
            degrees = g.member_counts().astype(np.float64)
            if owned:
                degrees[list(owned)] = 0.0
            total = degrees.sum()
            if total > 0:
                chosen = int(rng.choice(len(degrees), p=degrees / total))
        if chosen is None:
            # u already holds every attribute that has members
            chosen = _new_attribute(g, rng, attribute_types)
        a = chosen
    else:
        a = _new_attribute(g, rng, attribute_types)

    g.add_attribute_link(u, a)
    return a


class SanGenerator:
    """Runs the model step by step; generate() is the one-call entry point."""

    def __init__(self, params: GenParams):
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.graph = SanGraph(params.attribute_types)
        self.log = EventLog()
        self.states: Dict[int, NodeState] = {}
        self._heap: List[Tuple[float, int, int]] = []
        self._seq = 0
        self._attr_degree = FenwickSampler()
        self._initialize()
        self.attachment = AttachmentSampler(self.graph, params)

    def _initialize(self) -> None:
        """Complete SAN: every ordered social pair linked and every user holding every attribute."""
        g, params = self.graph, self.params
        users = [g.add_social_node() for _ in range(params.init_social)]
        for u in users:
            self.log.append(Event.arrive(0.0, g.social_label(u)))
        types = params.attribute_types
        attrs = [g.add_attribute_node(types[i % len(types)]) for i in range(params.init_attr)]
        for u in users:
            for a in attrs:
                g.add_attribute_link(u, a)
                self.log.append(Event.alink(0.0, g.social_label(u), *g.attribute_label(a)))
        for u in users:
            for v in users:
                if u != v:
                    g.add_social_link(u, v)
                    self.log.append(Event.slink(0.0, g.social_label(u), g.social_label(v), LinkOrigin.INIT))
        for a in attrs:
            self._attr_degree.append(float(len(g.members(a))))

    def _schedule(self, u: int, state: NodeState) -> None:
        if state.wake_time <= state.death:
            heapq.heappush(self._heap, (state.wake_time, self._seq, u))
            self._seq += 1

    def _link(self, u: int, v: int, t: float, origin: LinkOrigin) -> None:
        self.graph.add_social_link(u, v)
        self.attachment.indegree_changed(v)
        self.log.append(Event.slink(t, self.graph.social_label(u), self.graph.social_label(v), origin))

    def _arrive(self, t: float) -> None:
        g, params, rng = self.graph, self.params, self.rng
        u = g.add_social_node()
        self.attachment.add_social(u)
        self.log.append(Event.arrive(t, g.social_label(u)))

        for _ in range(sample_attribute_degree(params, rng)):
            a = attribute_link_step(g, u, rng, params.p, params.attribute_types, self._attr_degree)
            while len(self._attr_degree) < g.n_attribute:
                self._attr_degree.append(0.0)
            self._attr_degree.update(a, float(len(g.members(a))))
            self.attachment.add_member(a, u)
            self.log.append(Event.alink(t, g.social_label(u), *g.attribute_label(a)))

        v = self.attachment.select(u, rng)
        self._link(u, v, t, LinkOrigin.FIRST)

        state = NodeState(arrival=t, lifetime=sample_lifetime(params, rng), wake_time=t, outdegree=1)
        state.wake_time = t + sample_sleep(params, state.outdegree, rng)
        self.states[u] = state
        self._schedule(u, state)

    def _wake(self, until: float) -> None:
        while self._heap and self._heap[0][0] <= until:
            wake, _, u = heapq.heappop(self._heap)
            state = self.states[u]
            try:
                v = closure_select(self.graph, u, self.params, self.rng)
            except NoCandidate as e:
                logger.debug(f"Wake of node {u} at {wake:.4f} consumed without a link: {e}")
            else:
                self._link(u, v, wake, LinkOrigin.CLOSURE)
                state.outdegree += 1
            state.wake_time = wake + sample_sleep(self.params, state.outdegree, self.rng)
            self._schedule(u, state)

    def step(self, t: int) -> None:
        """Step t covers the time window (t - 1, t]; the arrival opens it."""
        self._arrive(float(t - 1))
        self._wake(float(t))

    def run(self) -> Tuple[SanGraph, EventLog]:
        total = self.params.T
        report_every = max(1, total // 10)
        for t in range(1, total + 1):
            self.step(t)
            if t % report_every == 0:
                logger.info(
                    f"Step {t}/{total}: {self.graph.n_social} social nodes, "
                    f"{self.graph.n_social_links} social links, {self.graph.n_attribute} attribute nodes"
                )
        return self.graph.freeze(), self.log


def generate(params: GenParams) -> Tuple[SanGraph, EventLog]:
    """
    Generate a SAN and its event log.
    :param params: validated GenParams (seed included).
    :return: frozen graph and the ordered event log that rebuilds it.
    """
    logger.info(
        f"Generating SAN: T={params.T}, attachment={params.attachment.value}, "
        f"closure={params.closure.value}, seed={params.seed}"
    )
    return SanGenerator(params).run()
