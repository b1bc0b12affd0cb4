"""
Event-level likelihood of attachment and closure models.

An EventLog is replayed from the empty graph; every scored social link is
evaluated against the graph state immediately before it. Links annotated
"first" are attachment events, links annotated "closure" are closure events
and "init" links are never scored. Unannotated logs treat the first link of
each source as its attachment event and every later link as a closure event.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from models.attachment import attribute_factor, effective_exponents, eligible_mask, shared_attribute_counts
from models.closure import eligible_distribution
from models.params import Attachment, Closure
from utils.san_graph import (
    Event,
    EventKind,
    LinkOrigin,
    SanGraph,
    common_attribute_count,
    common_social_neighbor_count,
)

logger = logging.getLogger(__name__)

SIGN_CONVENTION = (
    "improvement = (l_PA - l) / l_PA; log-likelihoods are negative, so a positive "
    "improvement means the cell explains the events better than PA"
)


class UnreplayableLog(ValueError):
    pass


@dataclass(frozen=True)
class LoglikScore:
    """Sum of finite log-probabilities plus the count of events outside the model's support."""

    loglik: float
    scored: int
    impossible: int

    def __float__(self) -> float:
        return self.loglik


@dataclass
class LikelihoodGrid:
    attachment: Attachment
    alphas: List[float]
    betas: List[float]
    loglik: np.ndarray
    l_pa: float
    improvement: np.ndarray
    scored: int
    impossible: np.ndarray
    metadata: Dict[str, str] = field(default_factory=lambda: {"sign_convention": SIGN_CONVENTION})

    def best_cell(self) -> Tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(self.loglik)), self.loglik.shape)
        return self.alphas[i], self.betas[j]

    def to_dict(self) -> Dict[str, object]:
        return {
            "attachment": self.attachment.value,
            "alphas": list(self.alphas),
            "betas": list(self.betas),
            "loglik": self.loglik.tolist(),
            "l_pa": self.l_pa,
            "improvement": self.improvement.tolist(),
            "scored_events": self.scored,
            "impossible_events": self.impossible.tolist(),
            "best_cell": list(self.best_cell()),
            "metadata": dict(self.metadata),
        }

    def write_csv(self, path: Path, header: Optional[Dict[str, str]] = None) -> Path:
        """Improvement matrix: one row per alpha, one column per beta."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            for key, value in (header or {}).items():
                f.write(f"# {key}={value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["alpha\\beta"] + [repr(float(b)) for b in self.betas])
            for alpha, row in zip(self.alphas, self.improvement):
                writer.writerow([repr(float(alpha))] + [repr(float(v)) for v in row])
        logger.info(f"Wrote {path}")
        return path


# ------------------------------------------------------------------ replay
def link_roles(events: Iterable[Event]) -> List[Optional[LinkOrigin]]:
    """Role of every event (None for non-link events)."""
    roles: List[Optional[LinkOrigin]] = []
    seen_sources = set()
    for event in events:
        if event.kind != EventKind.SLINK:
            roles.append(None)
            continue
        if event.origin is not None:
            roles.append(LinkOrigin(event.origin))
        elif event.args[0] in seen_sources:
            roles.append(LinkOrigin.CLOSURE)
        else:
            roles.append(LinkOrigin.FIRST)
        seen_sources.add(event.args[0])
    return roles


def replay_timeline(events: Sequence[Event]) -> Iterator[Tuple[Event, Optional[LinkOrigin], SanGraph]]:
    """
    Yield (event, role, graph) with the graph in its state just before the event;
    the event is applied once the consumer resumes.
    :raises UnreplayableLog: on events referring to unknown nodes or invalid links.
    """
    graph = SanGraph(())
    for index, (event, role) in enumerate(zip(events, link_roles(events))):
        if event.kind == EventKind.SLINK:
            src, dst = event.args
            if not graph.has_social_label(src) or not graph.has_social_label(dst):
                raise UnreplayableLog(f"event {index}: link {src}->{dst} before both arrivals")
        elif event.kind == EventKind.ALINK and not graph.has_social_label(event.args[0]):
            raise UnreplayableLog(f"event {index}: attribute link of {event.args[0]} before its arrival")
        yield event, role, graph
        try:
            graph.apply(event)
        except ValueError as e:
            raise UnreplayableLog(f"event {index}: {e}") from e


# -------------------------------------------------------------- attachment
def _attachment_terms(g: SanGraph, u: int, type_weights: Optional[Dict[str, float]]):
    mask = eligible_mask(g, u)
    candidates = np.flatnonzero(mask)
    log_base = np.log(g.in_degrees()[candidates] + 1.0)
    shared = shared_attribute_counts(g, u, type_weights)[candidates]
    return candidates, log_base, shared


def _cell_log_weights(attachment: Attachment, alpha: float, beta: float,
                      log_base: np.ndarray, shared: np.ndarray) -> np.ndarray:
    alpha, beta = effective_exponents(attachment, alpha, beta)
    factor = attribute_factor(shared, attachment, beta)
    with np.errstate(divide="ignore"):
        return alpha * log_base + np.log(factor)


def _attachment_grid(events: Sequence[Event], attachment: Attachment, cells: List[Tuple[float, float]],
                     type_weights: Optional[Dict[str, float]] = None) -> Tuple[np.ndarray, np.ndarray, int]:
    totals = np.zeros(len(cells))
    impossible = np.zeros(len(cells), dtype=np.int64)
    scored = 0
    for event, role, g in replay_timeline(events):
        if role != LinkOrigin.FIRST:
            continue
        scored += 1
        u, v = g.social_id(event.args[0]), g.social_id(event.args[1])
        candidates, log_base, shared = _attachment_terms(g, u, type_weights)
        position = np.searchsorted(candidates, v)
        eligible = position < len(candidates) and candidates[position] == v
        for i, (alpha, beta) in enumerate(cells):
            if not eligible:
                impossible[i] += 1
                continue
            log_w = _cell_log_weights(attachment, alpha, beta, log_base, shared)
            term = log_w[position] - logsumexp(log_w)
            if np.isfinite(term):
                totals[i] += term
            else:
                impossible[i] += 1
    return totals, impossible, scored


def attachment_score(events: Sequence[Event], attachment: Attachment, alpha: float, beta: float,
                     type_weights: Optional[Dict[str, float]] = None) -> LoglikScore:
    totals, impossible, scored = _attachment_grid(events, Attachment(attachment), [(alpha, beta)], type_weights)
    return LoglikScore(float(totals[0]), scored, int(impossible[0]))


def attachment_loglik(events: Sequence[Event], attachment: Attachment, alpha: float, beta: float,
                      type_weights: Optional[Dict[str, float]] = None) -> float:
    """Sum over first-link events of log P(target) under the attachment variant."""
    return attachment_score(events, attachment, alpha, beta, type_weights).loglik


def likelihood_grid(events: Sequence[Event], alphas: Sequence[float], betas: Sequence[float],
                    attachment: Attachment = Attachment.LAPA,
                    type_weights: Optional[Dict[str, float]] = None) -> LikelihoodGrid:
    """
    attachment_loglik over every (alpha, beta) cell in one replay, with the
    relative improvement over PA. When (1, 0) is on the grid it is the PA
    reference itself, so its improvement is exactly 0.
    """
    alphas, betas = [float(a) for a in alphas], [float(b) for b in betas]
    if not alphas or not betas:
        raise ValueError("alpha and beta grids must be non-empty")
    attachment = Attachment(attachment)
    cells = [(a, b) for a in alphas for b in betas]
    pa_on_grid = (1.0, 0.0) in cells
    if not pa_on_grid:
        cells.append((1.0, 0.0))
    totals, impossible, scored = _attachment_grid(events, attachment, cells, type_weights)
    if pa_on_grid:
        l_pa = float(totals[cells.index((1.0, 0.0))])
    else:
        l_pa = float(totals[-1])
        totals, impossible = totals[:-1], impossible[:-1]
    shape = (len(alphas), len(betas))
    loglik = totals.reshape(shape)
    improvement = (l_pa - loglik) / l_pa if l_pa != 0 else np.zeros(shape)
    if pa_on_grid:
        improvement[alphas.index(1.0), betas.index(0.0)] = 0.0
    logger.info(f"Likelihood grid over {len(alphas)}x{len(betas)} cells, {scored} attachment events, l_PA={l_pa:.3f}")
    return LikelihoodGrid(attachment, alphas, betas, loglik, l_pa, improvement, scored, impossible.reshape(shape))


# ----------------------------------------------------------------- closure
@dataclass(frozen=True)
class ClosureClassification:
    triadic: float
    focal: float
    both: float
    neither: float
    total: int

    def to_dict(self) -> Dict[str, float]:
        return {"triadic": self.triadic, "focal": self.focal, "both": self.both,
                "neither": self.neither, "total": self.total}


def classify_closures(events: Sequence[Event], closures_only: bool = False) -> ClosureClassification:
    """
    Classify non-initial social links by what their endpoints share just before
    the link: a social neighbor (triadic), an attribute (focal), both, or neither.
    Triadic and focal overlap, so their fractions may sum to more than 1.
    """
    counts = {"triadic": 0, "focal": 0, "both": 0, "neither": 0}
    total = 0
    for event, role, g in replay_timeline(events):
        if role is None or role == LinkOrigin.INIT:
            continue
        if closures_only and role != LinkOrigin.CLOSURE:
            continue
        u, v = g.social_id(event.args[0]), g.social_id(event.args[1])
        triadic = common_social_neighbor_count(g, u, v) > 0
        focal = common_attribute_count(g, u, v) > 0
        total += 1
        counts["triadic"] += triadic
        counts["focal"] += focal
        counts["both"] += triadic and focal
        counts["neither"] += not (triadic or focal)
    if total == 0:
        return ClosureClassification(0.0, 0.0, 0.0, 0.0, 0)
    return ClosureClassification(*(counts[k] / total for k in ("triadic", "focal", "both", "neither")), total)


def closure_score(events: Sequence[Event], closure: Closure, fc: float = 1.0) -> LoglikScore:
    closure = Closure(closure)
    total, scored, impossible = 0.0, 0, 0
    for event, role, g in replay_timeline(events):
        if role != LinkOrigin.CLOSURE:
            continue
        scored += 1
        u, v = g.social_id(event.args[0]), g.social_id(event.args[1])
        probability = eligible_distribution(g, u, closure, fc).get(v, 0.0)
        if probability > 0:
            total += math.log(probability)
        else:
            impossible += 1
    if impossible:
        logger.debug(f"{impossible} of {scored} closure events fall outside the {closure.value} support")
    return LoglikScore(total, scored, impossible)


def closure_loglik(events: Sequence[Event], closure: Closure, fc: float = 1.0) -> float:
    """Sum over closure events of log P(target) under the two-hop selection model (finite terms only)."""
    return closure_score(events, closure, fc).loglik


@dataclass
class ClosureComparison:
    """
    Closure variants scored on a shared event set.

    `common` holds each variant's log-likelihood summed over the closure events
    that every compared variant can explain; `own` sums each variant over its own
    support. Impossible counts are per variant over all closure events.
    """

    common: Dict[Closure, float]
    own: Dict[Closure, float]
    impossible: Dict[Closure, int]
    common_events: int
    closure_events: int

    def ranking(self) -> List[Closure]:
        """Variants from best to worst on the common events."""
        return sorted(self.common, key=lambda c: self.common[c], reverse=True)

    def to_dict(self) -> Dict[str, Dict[str, float]]:
        return {
            closure.value: {
                "loglik": self.common[closure],
                "loglik_own_support": self.own[closure],
                "scored": self.closure_events,
                "common_events": self.common_events,
                "impossible": self.impossible[closure],
            }
            for closure in self.common
        }


def compare_closures(events: Sequence[Event], closures: Sequence[Closure] = tuple(Closure),
                     fc: float = 1.0) -> ClosureComparison:
    """Score several closure variants in one replay, comparable on the events all of them support."""
    closures = [Closure(c) for c in closures]
    if not closures:
        raise ValueError("compare_closures needs at least one variant")
    common = {c: 0.0 for c in closures}
    own = {c: 0.0 for c in closures}
    impossible = {c: 0 for c in closures}
    common_events = closure_events = 0
    for event, role, g in replay_timeline(events):
        if role != LinkOrigin.CLOSURE:
            continue
        closure_events += 1
        u, v = g.social_id(event.args[0]), g.social_id(event.args[1])
        terms = {}
        for closure in closures:
            probability = eligible_distribution(g, u, closure, fc).get(v, 0.0)
            if probability > 0:
                terms[closure] = math.log(probability)
                own[closure] += terms[closure]
            else:
                impossible[closure] += 1
        if len(terms) == len(closures):
            common_events += 1
            for closure, term in terms.items():
                common[closure] += term
    logger.debug(f"{common_events} of {closure_events} closure events are supported by every compared variant")
    return ClosureComparison(common, own, impossible, common_events, closure_events)
