"""
Sybil admission under a random-route defense on the degree-bounded social graph.

The headline number is the admission bound g_e * w: each attack edge lets
the adversary register at most w sybil identities. The optional "routes" mode
simulates random routes instead: every node holds one random permutation of
its edges per route instance, and sybils are admitted when an escaped route
(one entering the honest region over an attack edge) ends on the same tail
edge as one of the verifier's routes.
"""
import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from apps.bounded import degree_bounded_view
from apps.trials import AppResult, run_trials, sample_compromised
from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)


class SybilMode(str, Enum):
    BOUND = "bound"
    ROUTES = "routes"


class SybilConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    w: int = Field(10, ge=1, description="random route length")
    degree_bound: int = Field(100, ge=1)
    compromised_count: int = Field(0, ge=0)
    trials: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    mode: SybilMode = SybilMode.BOUND
    route_instances: Optional[int] = Field(None, ge=1, description="route instances; ceil(sqrt(edges)) when None")
    verifiers: int = Field(5, ge=1, description="honest verifiers sampled per trial in routes mode")
    workers: int = Field(1, ge=1)


def attack_edge_count(view: nx.Graph, compromised: np.ndarray) -> int:
    """Edges of the bounded view with at least one compromised endpoint."""
    bad = set(int(c) for c in compromised)
    return sum(1 for u, v in view.edges() if u in bad or v in bad)


class RouteTable:
    """Per-instance random routing permutations: the edge entered from decides the edge left by."""

    def __init__(self, view: nx.Graph, instances: int, rng: np.random.Generator):
        self.neighbors: Dict[int, List[int]] = {u: sorted(view.neighbors(u)) for u in view.nodes}
        self.position: Dict[int, Dict[int, int]] = {
            u: {v: i for i, v in enumerate(nbrs)} for u, nbrs in self.neighbors.items()
        }
        self.perms: List[Dict[int, np.ndarray]] = [
            {u: rng.permutation(len(nbrs)) for u, nbrs in self.neighbors.items() if nbrs}
            for _ in range(instances)
        ]

    def tail(self, instance: int, prev: int, node: int, hops: int) -> Tuple[int, int]:
        """Follow the route that entered node from prev for hops more steps; return the last directed edge."""
        perms = self.perms[instance]
        for _ in range(hops):
            nxt = self.neighbors[node][perms[node][self.position[node][prev]]]
            prev, node = node, nxt
        return prev, node


def _routes_trial(view: nx.Graph, cfg: SybilConfig, rng: np.random.Generator) -> float:
    n = view.number_of_nodes()
    compromised = sample_compromised(n, cfg.compromised_count, rng)
    bad = set(int(c) for c in compromised)
    honest = [u for u in sorted(view.nodes) if u not in bad and view.degree(u) > 0]
    if not bad or not honest:
        return 0.0
    instances = cfg.route_instances or max(1, math.ceil(math.sqrt(view.number_of_edges())))
    table = RouteTable(view, instances, rng)

    escaped = set()
    for s in sorted(bad):
        for h in table.neighbors[s]:
            if h in bad:
                continue
            for i in range(instances):
                # the adversary starts its route on the attack edge itself
                escaped.add((i, table.tail(i, s, h, cfg.w - 1)))

    verifiers = rng.choice(len(honest), size=min(cfg.verifiers, len(honest)), replace=False)
    admitted = []
    for index in verifiers:
        v = honest[int(index)]
        tails = set()
        for i in range(instances):
            first = table.neighbors[v][int(rng.integers(len(table.neighbors[v])))]
            tails.add((i, table.tail(i, v, first, cfg.w - 1)))
        admitted.append(cfg.w * len(tails & escaped))
    return float(np.mean(admitted))


def sybil_admission(g: SanGraph, cfg: SybilConfig) -> AppResult:
    """
    Accepted sybil identities as a function of compromised nodes (mean and 95% CI over trials).
    :raises ValueError: when compromised_count exceeds the number of social nodes.
    """
    if cfg.compromised_count > g.n_social:
        raise ValueError(f"compromised_count {cfg.compromised_count} exceeds {g.n_social} social nodes")
    view = degree_bounded_view(g, cfg.degree_bound, cfg.seed)

    def bound_trial(rng: np.random.Generator) -> float:
        compromised = sample_compromised(g.n_social, cfg.compromised_count, rng)
        return float(attack_edge_count(view, compromised) * cfg.w)

    def routes_trial(rng: np.random.Generator) -> float:
        return _routes_trial(view, cfg, rng)

    trial = bound_trial if cfg.mode == SybilMode.BOUND else routes_trial
    values = run_trials(trial, cfg.trials, cfg.seed, cfg.workers)
    result = AppResult.from_values(values, {"bounded_edges": float(view.number_of_edges())})
    logger.info(f"Sybil admission ({cfg.mode.value}) with {cfg.compromised_count} compromised: "
                f"{result.mean:.1f} [{result.ci_low:.1f}, {result.ci_high:.1f}]")
    return result
