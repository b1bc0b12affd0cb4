"""End-to-end compromise probability of random-walk circuits on the degree-bounded social graph."""
import logging
from typing import Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from apps.bounded import degree_bounded_view
from apps.trials import AppResult, run_trials, sample_compromised
from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)


class AnonConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    walk_length: int = Field(5, ge=2, description="relays per circuit")
    compromised_count: int = Field(0, ge=0)
    circuits: int = Field(1000, ge=1)
    degree_bound: int = Field(100, ge=1)
    trials: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    workers: int = Field(1, ge=1)


def _csr(view: nx.Graph) -> Tuple[np.ndarray, np.ndarray]:
    nodes = sorted(view.nodes)
    indptr = np.zeros(len(nodes) + 1, dtype=np.int64)
    indices = []
    for i, u in enumerate(nodes):
        nbrs = sorted(view.neighbors(u))
        indices.extend(nbrs)
        indptr[i + 1] = indptr[i] + len(nbrs)
    return indptr, np.asarray(indices, dtype=np.int64)


def simulate_circuits(view: nx.Graph, compromised: np.ndarray, walk_length: int, circuits: int,
                      rng: np.random.Generator) -> Tuple[float, int]:
    """
    Walk `circuits` circuits of walk_length relays from uniform honest initiators
    (from any node when every node is compromised).
    :return: (fraction of completed circuits whose first and last relays are compromised,
              number of draws skipped because the initiator was isolated)
    """
    n = view.number_of_nodes()
    indptr, indices = _csr(view)
    bad = np.zeros(n, dtype=bool)
    bad[compromised] = True
    pool = np.flatnonzero(~bad)
    if len(pool) == 0:
        pool = np.arange(n)

    starts = pool[rng.integers(len(pool), size=circuits)]
    degrees = indptr[starts + 1] - indptr[starts]
    isolated = int((degrees == 0).sum())
    current = starts[degrees > 0]
    if len(current) == 0:
        return 0.0, isolated
    first = None
    for hop in range(walk_length):
        deg = indptr[current + 1] - indptr[current]
        current = indices[indptr[current] + np.floor(rng.random(len(current)) * deg).astype(np.int64)]
        if hop == 0:
            first = current
    compromised_circuits = bad[first] & bad[current]
    return float(compromised_circuits.mean()), isolated


def anonymity_compromise_probability(g: SanGraph, cfg: AnonConfig) -> AppResult:
    """
    Probability that an adversary controls both the first and the last relay of a circuit.
    :raises ValueError: when compromised_count exceeds the number of social nodes.
    """
    if cfg.compromised_count > g.n_social:
        raise ValueError(f"compromised_count {cfg.compromised_count} exceeds {g.n_social} social nodes")
    view = degree_bounded_view(g, cfg.degree_bound, cfg.seed)

    def trial(rng: np.random.Generator) -> Tuple[float, int]:
        compromised = sample_compromised(g.n_social, cfg.compromised_count, rng)
        return simulate_circuits(view, compromised, cfg.walk_length, cfg.circuits, rng)

    outcomes = run_trials(trial, cfg.trials, cfg.seed, cfg.workers)
    isolated = sum(skipped for _, skipped in outcomes)
    if isolated:
        logger.warning(f"{isolated} circuit draws started at isolated nodes and were skipped")
    result = AppResult.from_values([rate for rate, _ in outcomes], {"isolated_starts": float(isolated)})
    logger.info(f"Anonymity with {cfg.compromised_count} compromised: {result.mean:.4f} "
                f"[{result.ci_low:.4f}, {result.ci_high:.4f}]")
    return result
