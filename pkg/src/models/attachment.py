"""
Attribute-augmented preferential attachment.

    PA:   f(u, v) ~ (d_i(v) + 1)
    LAPA: f(u, v) ~ (d_i(v) + 1)^alpha * (1 + beta * a(u, v))
    PAPA: f(u, v) ~ (d_i(v) + 1)^alpha * (1 + a(u, v)^beta)

The +1 keeps zero-indegree nodes reachable.
"""
import logging
from collections import Counter
from typing import Dict, List, Optional, Tuple

import numpy as np

from models.params import Attachment, GenParams
from models.sampling import FenwickSampler
from utils.san_graph import SanGraph

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 64


class NoCandidate(LookupError):
    """Raised when no eligible target exists."""


def effective_exponents(attachment: Attachment, alpha: float, beta: float) -> Tuple[float, float]:
    """(alpha, beta) actually used by a variant; Uniform and PA ignore the configured values."""
    if attachment == Attachment.UNIFORM:
        return 0.0, 0.0
    if attachment == Attachment.PA:
        return 1.0, 0.0
    return alpha, beta


def shared_attribute_counts(g: SanGraph, u: int, type_weights: Optional[Dict[str, float]] = None) -> np.ndarray:
    """a(u, v) for every social node v (weighted by attribute type when type_weights is given)."""
    counts = np.zeros(g.n_social, dtype=np.float64)
    for a in g.attribute_list(u):
        weight = 1.0 if type_weights is None else type_weights.get(g.attribute_type(a), 1.0)
        members = np.asarray(g.members(a), dtype=np.int64)
        np.add.at(counts, members, weight)
    return counts


def attribute_factor(shared: np.ndarray, attachment: Attachment, beta: float) -> np.ndarray:
    if attachment == Attachment.PAPA:
        if beta == 0:
            return np.full_like(shared, 2.0)
        powered = np.zeros_like(shared)
        positive = shared > 0
        powered[positive] = shared[positive] ** beta
        return 1.0 + powered
    return 1.0 + beta * shared


def eligible_mask(g: SanGraph, u: int) -> np.ndarray:
    """All social nodes except u and the existing targets of u."""
    mask = np.ones(g.n_social, dtype=bool)
    mask[u] = False
    targets = g.out_set(u)
    if targets:
        mask[np.fromiter(targets, dtype=np.int64, count=len(targets))] = False
    return mask


def attachment_weights(g: SanGraph, u: int, attachment: Attachment, alpha: float, beta: float,
                       type_weights: Optional[Dict[str, float]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unnormalized selection weights over the eligible candidates of u.
    :return: (candidate ids, weights), both aligned.
    """
    alpha, beta = effective_exponents(attachment, alpha, beta)
    mask = eligible_mask(g, u)
    candidates = np.flatnonzero(mask)
    base = (g.in_degrees()[candidates] + 1.0) ** alpha
    if beta == 0 and attachment != Attachment.PAPA:
        weights = base
    else:
        shared = shared_attribute_counts(g, u, type_weights)[candidates]
        weights = base * attribute_factor(shared, attachment, beta)
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError(f"attachment weights must be finite and non-negative (alpha={alpha}, beta={beta})")
    return candidates, weights


def attachment_select(g: SanGraph, u: int, params: GenParams, rng: np.random.Generator) -> int:
    """Draw the target of u's first outgoing link by exact weight computation."""
    candidates, weights = attachment_weights(g, u, params.attachment, params.alpha, params.beta, params.type_weights)
    total = weights.sum()
    if len(candidates) == 0 or not total > 0:
        raise NoCandidate(f"no eligible attachment target for social node {u}")
    return int(candidates[rng.choice(len(candidates), p=weights / total)])


class AttachmentSampler:
    """
    Incremental sampler used by the generator.

    A global Fenwick tree holds (d_i(v) + 1)^alpha for every social node and
    one tree per attribute node holds the same weights for its members, so a
    LAPA draw is a mixture: the base term, or an attribute of u picked in
    proportion to beta * type_weight * (sum of its member weights) followed by
    a member. Draws landing on u or an existing target are rejected.
    """

    def __init__(self, g: SanGraph, params: GenParams):
        self.g = g
        self.params = params
        self.alpha, self.beta = effective_exponents(params.attachment, params.alpha, params.beta)
        self._base = FenwickSampler()
        self._attr_trees: List[FenwickSampler] = []
        self._attr_pos: List[Dict[int, int]] = []
        for v in range(g.n_social):
            self.add_social(v)
        for a in range(g.n_attribute):
            self._ensure_attribute(a)
            for v in g.members(a):
                self.add_member(a, v)

    def _weight(self, v: int) -> float:
        return (self.g.in_degree(v) + 1.0) ** self.alpha

    def _ensure_attribute(self, a: int) -> None:
        while len(self._attr_trees) <= a:
            self._attr_trees.append(FenwickSampler())
            self._attr_pos.append({})

    def add_social(self, v: int) -> None:
        self._base.append(self._weight(v))

    def add_member(self, a: int, v: int) -> None:
        self._ensure_attribute(a)
        self._attr_pos[a][v] = self._attr_trees[a].append(self._weight(v))

    def indegree_changed(self, v: int) -> None:
        weight = self._weight(v)
        self._base.update(v, weight)
        for a in self.g.attribute_list(v):
            self._attr_trees[a].update(self._attr_pos[a][v], weight)

    def _eligible(self, u: int, v: int) -> bool:
        return v != u and v not in self.g.out_set(u)

    def _draw_lapa(self, u: int, rng: np.random.Generator) -> int:
        base_total = self._base.total
        attrs = self.g.attribute_list(u)
        extras = [
            self.beta * self.params.type_weight(self.g.attribute_type(a)) * self._attr_trees[a].total for a in attrs
        ]
        r = rng.random() * (base_total + sum(extras))
        if r < base_total or not attrs:
            return self._base.find(r)
        r -= base_total
        for a, extra in zip(attrs, extras):
            if r < extra:
                return self.g.members(a)[self._attr_trees[a].sample(rng)]
            r -= extra
        a = attrs[-1]
        return self.g.members(a)[self._attr_trees[a].sample(rng)]

    def _draw_papa(self, u: int, rng: np.random.Generator, extra_cache: list) -> int:
        if not extra_cache:
            shared: Counter = Counter()
            for a in self.g.attribute_list(u):
                weight = self.params.type_weight(self.g.attribute_type(a))
                for v in self.g.members(a):
                    shared[v] += weight
            candidates = sorted(shared)
            extras = np.array([self._base.weight(v) * shared[v] ** self.beta for v in candidates])
            extra_cache.extend([candidates, extras, float(extras.sum())])
        candidates, extras, extra_total = extra_cache
        base_total = self._base.total
        r = rng.random() * (base_total + extra_total)
        if r < base_total:
            return self._base.find(r)
        index = int(np.searchsorted(np.cumsum(extras), r - base_total, side="right"))
        return candidates[min(index, len(candidates) - 1)]

    def _draw_heuristic(self, u: int, rng: np.random.Generator) -> int:
        attrs = self.g.attribute_list(u)
        if attrs:
            a = attrs[int(rng.integers(len(attrs)))]
            if len(self.g.members(a)) > 1:
                return self.g.members(a)[self._attr_trees[a].sample(rng)]
        return self._base.sample(rng)

    def select(self, u: int, rng: np.random.Generator) -> int:
        """Target of u's first outgoing link."""
        attachment = self.params.attachment
        use_heuristic = self.params.lapa_heuristic and attachment in (Attachment.LAPA, Attachment.PAPA)
        # the mixture decomposition needs non-negative attribute terms
        if self.beta >= 0:
            papa_cache: list = []
            for _ in range(MAX_REJECTIONS):
                if use_heuristic:
                    v = self._draw_heuristic(u, rng)
                elif attachment == Attachment.PAPA and self.beta != 0:
                    v = self._draw_papa(u, rng, papa_cache)
                elif self.beta == 0 or attachment == Attachment.PAPA:
                    v = self._base.sample(rng)
                else:
                    v = self._draw_lapa(u, rng)
                if self._eligible(u, v):
                    return v
            logger.debug(f"Attachment rejection budget exhausted for node {u}; using exact weights")
        return attachment_select(self.g, u, self.params, rng)
